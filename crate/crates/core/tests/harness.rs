//! End-to-end checks of the experiment harness.

use bgo_core::algorithms::{
    build_schedule, rsg_bgo, sgd_bgo, total_samples, Algorithm, IterationSchedule, RunOptions,
    ScheduleParams,
};
use bgo_core::experiment::{
    aggregate, rates_csv, run_cells, run_experiment, summary_json, write_results, write_svg,
    ExperimentConfig, CSV_HEADER,
};
use bgo_core::oracle::{ExactGradientOracle, FnOracle, OracleKind};
use bgo_core::problems::Objective;
use bgo_core::rng::stream;
use bgo_core::{Error, Point};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn config(algo: &str, oracle: &str, grid: &str, reps: usize) -> ExperimentConfig {
    let objective = if algo == "sgd" {
        "pseudo_huber"
    } else {
        "bounded_nonconvex"
    };
    let metric = if algo == "sgd" {
        "optimality_gap"
    } else {
        "grad_norm_sq"
    };
    ExperimentConfig::parse(&format!(
        "algo = {algo}\noracle = {oracle}\nobjective = {objective}\ndim = 3\nnoise_std = 1\ngrad_noise_std = 0.5\n\
         x0 = 0.3\nn_grid = {grid}\nreplications = {reps}\nseed = 99\nmetric = {metric}\nout = unused.csv\n"
    ))
    .unwrap()
}

#[test]
fn same_seed_gives_identical_csv_regardless_of_threads() {
    let c = config("rsg", "o1", "16,32,64", 12);
    let serial = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let parallel = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let a = rates_csv(&serial.install(|| run_experiment(&c)).unwrap());
    let b = rates_csv(&parallel.install(|| run_experiment(&c)).unwrap());
    assert_eq!(a, b);
    let mut other = c.clone();
    other.seed += 1;
    assert_ne!(a, rates_csv(&run_experiment(&other).unwrap()));
}

#[test]
fn split_replications_merge_to_the_same_means() {
    let c = config("sgd", "o1", "16,32,64", 40);
    let full = run_experiment(&c).unwrap();
    let mut cells = run_cells(&c, 25..40).unwrap();
    cells.extend(run_cells(&c, 0..25).unwrap());
    let merged = aggregate(&c, &cells).unwrap();
    for (a, b) in full.rows.iter().zip(&merged.rows) {
        assert!((a.metric_mean - b.metric_mean).abs() <= 1e-10);
        assert!((a.metric_stderr - b.metric_stderr).abs() <= 1e-10);
    }
}

#[test]
fn reported_samples_match_closed_forms() {
    for (algo, oracle) in [("rsg", "o1"), ("rsg", "o2"), ("sgd", "o1"), ("sgd", "o2")] {
        let mut c = config(algo, oracle, "4,8,16,32", 2);
        c.m0 = 3.0;
        let result = run_experiment(&c).unwrap();
        for row in &result.rows {
            let n = row.n as u128;
            let expected = match (algo, oracle) {
                ("rsg", "o1") => 2 * 3 * n * n,
                ("rsg", "o2") => 2 * 3 * n * n * n,
                _ => {
                    let s = build_schedule(c.algo, c.oracle, row.n, &c.schedule_params().unwrap())
                        .unwrap();
                    2 * total_samples(&s)
                }
            };
            assert_eq!(row.samples_total, expected, "{algo}-{oracle} N={n}");
            assert_eq!(row.oracle_calls, row.n);
        }
    }
}

#[test]
fn exact_gradient_descent_gap_shrinks_with_budget() {
    let obj = Objective::quadratic(vec![2.0, 0.5, 0.5, 1.0], vec![1.0, -1.0]).unwrap();
    let l = obj.smoothness().unwrap();
    let oracle = ExactGradientOracle {
        objective: obj.clone(),
    };
    let params = ScheduleParams {
        lipschitz: l,
        ..Default::default()
    };
    let mut last = f64::INFINITY;
    for n in [4, 8, 16, 32, 64, 128] {
        let s = build_schedule(Algorithm::Sgd, OracleKind::O1, n, &params).unwrap();
        let gap = obj
            .value(
                sgd_bgo(
                    &oracle,
                    Point::zeros(2),
                    &s,
                    &RunOptions::default(),
                    &mut stream(1),
                )
                .unwrap()
                .returned_point
                .as_slice(),
            )
            .unwrap();
        assert!(s.gammas().iter().all(|g| *g <= 1.0 / l));
        assert!(gap < last, "N={n}: {gap} >= {last}");
        last = gap;
    }
}

#[test]
fn output_files_follow_the_schema() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config("rsg", "o2", "8,16,32", 3);
    c.out = dir.path().join("nested/rates.csv");
    let result = run_experiment(&c).unwrap();
    write_results(&result, &c.out).unwrap();
    write_svg(&result, &c.out.with_extension("svg")).unwrap();

    let csv = std::fs::read_to_string(&c.out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 1 + c.n_grid.len());
    assert!(!csv.contains('\r'));
    for (line, n) in lines[1..].iter().zip(&c.n_grid) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 5);
        assert_eq!(fields[0].parse::<usize>().unwrap(), *n);
        assert!(fields[1].parse::<f64>().unwrap() > 0.0);
    }

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(c.out.with_extension("json")).unwrap())
            .unwrap();
    assert_eq!(json, summary_json(&result));
    assert!(json["slope"].is_f64() && json["slope_stderr"].is_f64());
    assert_eq!(json["config_echo"]["oracle"], "o2");
    assert!(std::fs::read_to_string(c.out.with_extension("svg"))
        .unwrap()
        .starts_with("<svg"));
}

#[test]
fn metric_mismatch_is_rejected_before_running() {
    let mut c = config("rsg", "o1", "8,16,32", 1);
    c.metric = "policy_risk".parse().unwrap();
    assert!(matches!(run_experiment(&c), Err(e) if e.is_config()));
}

#[test]
fn divergence_surfaces_as_an_error() {
    let mut c = config("rsg", "o1", "8,16,32", 2);
    c.gamma0 = 1e300;
    c.lipschitz = Some(1e-300);
    c.model.noise_std = 1e300;
    assert!(matches!(run_experiment(&c), Err(Error::Divergence { .. })));
}

#[test]
fn returned_index_follows_step_size_weights() {
    let gammas = vec![3.0, 1.0, 1.0, 1.0];
    let s = IterationSchedule::new(gammas.clone(), vec![1.0; 4], vec![1; 4]).unwrap();
    let oracle = FnOracle::new(1, |_: &[f64]| vec![0.0]);
    let mut rng = stream(31);
    let draws = 100_000;
    let mut counts = [0usize; 4];
    for _ in 0..draws {
        let t = rsg_bgo(
            &oracle,
            Point::zeros(1),
            &s,
            &RunOptions::default(),
            &mut rng,
        )
        .unwrap();
        counts[t.selected_index.unwrap() - 1] += 1;
    }
    let total: f64 = gammas.iter().sum();
    let chi2: f64 = counts
        .iter()
        .zip(&gammas)
        .map(|(c, g)| {
            let e = draws as f64 * g / total;
            (*c as f64 - e).powi(2) / e
        })
        .sum();
    let critical = ChiSquared::new(3.0).unwrap().inverse_cdf(0.999);
    assert!(chi2 < critical, "{chi2} vs {critical}");
}
