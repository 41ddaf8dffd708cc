//! `bgo`: run rate experiments, oracle probes, phase tables and risk-PG runs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bgo_core::algorithms::{phase_plan, Algorithm};
use bgo_core::experiment::{
    load_config, load_probe_config, run_experiment, run_probe, sibling, write_probe, write_results,
    write_svg, ExperimentConfig,
};
use bgo_core::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bgo",
    version,
    about = "Zeroth-order optimization with biased gradient oracles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunFlags {
    /// Run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 picks one per core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Also write a log-log SVG chart next to the CSV.
    #[arg(long)]
    svg: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Replicated runs over the budget grid, with a fitted rate slope.
    Rates(RunFlags),
    /// Empirical bias and variance of the oracle over an (eta, m) grid.
    OracleProbe(RunFlags),
    /// Print the dyadic phase plan for each budget.
    Phases {
        #[arg(required = true)]
        n: Vec<usize>,
    },
    /// Risk-sensitive policy gradient on the shortest path chain.
    Riskpg(RunFlags),
}

enum Failure {
    Config(String),
    Divergence(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Divergence { .. } => Failure::Divergence(e.to_string()),
            e if e.is_config() => Failure::Config(e.to_string()),
            e => Failure::Other(e.to_string()),
        }
    }
}

fn config_error(path: &Path, e: Error) -> Failure {
    Failure::Config(format!("{}: {e}", path.display()))
}

fn pool(threads: usize) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::Other(e.to_string()))
}

fn rates(flags: &RunFlags, want: Algorithm) -> Result<(), Failure> {
    let mut config: ExperimentConfig =
        load_config(&flags.config).map_err(|e| config_error(&flags.config, e))?;
    if let Some(seed) = flags.seed {
        config.seed = seed;
    }
    let riskpg = config.algo == Algorithm::RiskPg;
    if riskpg != (want == Algorithm::RiskPg) {
        let hint = if riskpg {
            "use the riskpg subcommand"
        } else {
            "riskpg needs algo = riskpg"
        };
        return Err(Failure::Config(format!(
            "{}: {hint}",
            flags.config.display()
        )));
    }
    let result = pool(flags.threads)?.install(|| run_experiment(&config))?;
    write_results(&result, &config.out)?;
    if flags.svg {
        write_svg(&result, &sibling(&config.out, "svg"))?;
    }
    println!(
        "{:>8} {:>14} {:>14} {:>24}",
        "N", "mean", "stderr", "samples"
    );
    for r in &result.rows {
        println!(
            "{:>8} {:>14.6e} {:>14.6e} {:>24}",
            r.n, r.metric_mean, r.metric_stderr, r.samples_total
        );
    }
    match (result.slope, result.slope_stderr) {
        (Some(s), Some(se)) => println!("slope {s:.4} +- {se:.4}"),
        _ => println!("slope unavailable"),
    }
    println!("wrote {}", config.out.display());
    Ok(())
}

fn probe(flags: &RunFlags) -> Result<(), Failure> {
    let mut config =
        load_probe_config(&flags.config).map_err(|e| config_error(&flags.config, e))?;
    if let Some(seed) = flags.seed {
        config.seed = seed;
    }
    let rows = pool(flags.threads)?.install(|| run_probe(&config))?;
    write_probe(&rows, &config.out)?;
    println!(
        "{:>10} {:>10} {:>14} {:>14}",
        "eta", "m", "bias_sup", "variance"
    );
    for r in &rows {
        println!(
            "{:>10} {:>10} {:>14.6e} {:>14.6e}",
            r.eta, r.m, r.bias_sup, r.variance
        );
    }
    println!("wrote {}", config.out.display());
    Ok(())
}

fn phases(ns: &[usize]) -> Result<(), Failure> {
    for &n in ns {
        let plan = phase_plan(n)?;
        println!("N = {n}, l = {}", plan.l);
        println!(
            "{:>6} {:>10} {:>10} {:>8}",
            "phase", "N_i", "N_i+1", "length"
        );
        for i in 0..plan.phases() {
            println!(
                "{:>6} {:>10} {:>10} {:>8}",
                i,
                plan.boundaries[i],
                plan.boundaries[i + 1],
                plan.phase_len(i)
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Rates(f) => rates(f, Algorithm::Rsg),
        Command::Riskpg(f) => rates(f, Algorithm::RiskPg),
        Command::OracleProbe(f) => probe(f),
        Command::Phases { n } => phases(n),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Divergence(m)) => {
            eprintln!("divergence: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Other(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
