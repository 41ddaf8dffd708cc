use std::ops::Range;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, Metric, ProbeConfig};
use super::fit::fit_loglog_slope;
use crate::algorithms::{build_schedule, rsg_bgo, sgd_bgo, Algorithm, RunOptions, RunTrace};
use crate::error::{Error, Result};
use crate::oracle::{probe_oracle, GradientOracle};
use crate::point::{norm_sq, Point};
use crate::problems::Batch;
use crate::rl::{estimate_policy_risk, risk_pg, SoftmaxPolicy};
use crate::rng::{cell_stream, Stream};

/// Outcome of one `(N, replication)` run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub n: usize,
    pub replication: usize,
    pub metric: f64,
    pub samples: Batch,
    pub oracle_calls: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub n: usize,
    pub metric_mean: f64,
    pub metric_stderr: f64,
    /// Raw measurements (episodes for risk-PG) consumed by one run.
    pub samples_total: Batch,
    /// Oracle calls made by one run.
    pub oracle_calls: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateResult {
    pub rows: Vec<RateRow>,
    /// `None` with fewer than 3 grid points or a nonpositive mean.
    pub slope: Option<f64>,
    pub slope_stderr: Option<f64>,
    pub config: ExperimentConfig,
}

fn run_cell(config: &ExperimentConfig, n: usize, replication: usize) -> Result<CellResult> {
    let mut rng = cell_stream(config.seed, n, replication);
    let params = config.schedule_params()?;
    let schedule = build_schedule(config.algo, config.oracle, n, &params)?;
    let opts = RunOptions::default();
    let x1 = config.model.start()?;
    let (trace, metric) = match config.algo {
        Algorithm::RiskPg => {
            let env = config.ssp.build()?;
            let policy = SoftmaxPolicy::action_indicator(&env, x1.clone())?;
            let start = config.ssp.start;
            let trace = risk_pg(
                &env,
                start,
                &policy,
                x1,
                &schedule,
                config.risk,
                &opts,
                &mut rng,
            )?;
            let at = policy.with_param(trace.returned_point.clone())?;
            let risk = estimate_policy_risk(
                &env,
                &at,
                start,
                config.eval_episodes,
                config.risk,
                &mut rng,
            )?;
            (trace, risk)
        }
        Algorithm::Rsg | Algorithm::Sgd => {
            let oracle = config.model.oracle(config.oracle)?;
            let trace = drive(config.algo, &oracle, x1, &schedule, &opts, &mut rng)?;
            let metric = evaluate(config, &trace.returned_point)?;
            (trace, metric)
        }
    };
    Ok(CellResult {
        n,
        replication,
        metric,
        samples: trace.total_samples,
        oracle_calls: trace.oracle_calls,
    })
}

fn drive(
    algo: Algorithm,
    oracle: &dyn GradientOracle,
    x1: Point,
    schedule: &crate::algorithms::IterationSchedule,
    opts: &RunOptions,
    rng: &mut Stream,
) -> Result<RunTrace> {
    match algo {
        Algorithm::Sgd => sgd_bgo(oracle, x1, schedule, opts, rng),
        _ => rsg_bgo(oracle, x1, schedule, opts, rng),
    }
}

/// Metric from the analytic objective, never from oracle output.
fn evaluate(config: &ExperimentConfig, x: &Point) -> Result<f64> {
    let obj = config.model.objective()?;
    match config.metric {
        Metric::GradNormSq => Ok(norm_sq(&obj.grad(x.as_slice())?)),
        Metric::OptimalityGap => Ok(obj.value(x.as_slice())? - obj.min_value()),
        Metric::PolicyRisk => Err(Error::invalid(
            "metric",
            "policy_risk requires algo = riskpg",
        )),
    }
}

/// Runs replications `reps` of every grid budget. Cells run in parallel on the
/// current rayon pool; the result order is `(N, replication)` ascending.
pub fn run_cells(config: &ExperimentConfig, reps: Range<usize>) -> Result<Vec<CellResult>> {
    let cells: Vec<(usize, usize)> = config
        .n_grid
        .iter()
        .flat_map(|n| reps.clone().map(move |r| (*n, r)))
        .collect();
    cells
        .par_iter()
        .map(|(n, r)| run_cell(config, *n, *r))
        .collect()
}

/// Aggregates cells into per-budget rows and fits the rate slope.
pub fn aggregate(config: &ExperimentConfig, cells: &[CellResult]) -> Result<RateResult> {
    let mut rows = Vec::with_capacity(config.n_grid.len());
    for &n in &config.n_grid {
        let mut mine: Vec<&CellResult> = cells.iter().filter(|c| c.n == n).collect();
        if mine.is_empty() {
            return Err(Error::invalid("cells", format!("no results for N = {n}")));
        }
        mine.sort_by_key(|c| c.replication);
        let k = mine.len() as f64;
        let mean = mine.iter().map(|c| c.metric).sum::<f64>() / k;
        let stderr = if mine.len() > 1 {
            (mine.iter().map(|c| (c.metric - mean).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
        } else {
            0.0
        };
        rows.push(RateRow {
            n,
            metric_mean: mean,
            metric_stderr: stderr,
            samples_total: mine[0].samples,
            oracle_calls: mine[0].oracle_calls,
        });
    }
    let ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    let means: Vec<f64> = rows.iter().map(|r| r.metric_mean).collect();
    let fit = fit_loglog_slope(&ns, &means).ok();
    Ok(RateResult {
        rows,
        slope: fit.map(|f| f.slope),
        slope_stderr: fit.map(|f| f.stderr),
        config: config.clone(),
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<RateResult> {
    config.validate()?;
    let cells = run_cells(config, 0..config.replications)?;
    aggregate(config, &cells)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRow {
    pub eta: f64,
    pub m: Batch,
    pub bias_sup: f64,
    pub variance: f64,
}

/// Oracle diagnostics over the `(eta, m)` grid, at the configured start point.
pub fn run_probe(config: &ProbeConfig) -> Result<Vec<ProbeRow>> {
    let oracle = config.model.oracle(config.oracle)?;
    let x = config.model.start()?;
    let truth = config.model.model()?.true_grad(x.as_slice())?;
    let cells: Vec<(usize, f64, Batch)> = config
        .etas
        .iter()
        .flat_map(|e| config.batches.iter().map(move |m| (*e, *m)))
        .enumerate()
        .map(|(i, (e, m))| (i, e, m))
        .collect();
    cells
        .par_iter()
        .map(|&(i, eta, m)| {
            let mut rng = cell_stream(config.seed, i, 0);
            let d = probe_oracle(&oracle, &x, &truth, eta, m, config.trials, &mut rng)?;
            Ok(ProbeRow {
                eta,
                m,
                bias_sup: d.empirical_bias_sup,
                variance: d.empirical_variance,
            })
        })
        .collect()
}
