use std::hint::black_box;

use bgo_core::algorithms::{rsg_schedule_o2, sgd_schedule_o2};
use bgo_core::oracle::{BiasedOracle, GradientOracle};
use bgo_core::problems::{ErrorKind, MeasurementModel, Objective};
use bgo_core::risk::{cvar_estimate, Edf, RiskLevel};
use bgo_core::rl::{rollout, ChainParams, SoftmaxPolicy};
use bgo_core::rng::stream;
use bgo_core::Point;
use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

fn oracle_query(c: &mut Criterion) {
    let model = MeasurementModel::exact(Objective::bounded_nonconvex(vec![0.0; 5]).unwrap())
        .with_noise(1.0)
        .with_error(ErrorKind::HalfNormal, 0.5);
    let x = Point::new(vec![0.3; 5]).unwrap();
    let mut group = c.benchmark_group("oracle_query");
    for (name, oracle) in [
        ("o1", BiasedOracle::o1(model.clone())),
        ("o2", BiasedOracle::o2(model)),
    ] {
        let mut rng = stream(1);
        group.bench_function(name, |b| {
            b.iter(|| oracle.query(black_box(&x), 0.1, 1000, &mut rng).unwrap())
        });
    }
    group.finish();
}

fn cvar(c: &mut Criterion) {
    let level = RiskLevel::new(0.9).unwrap();
    let mut group = c.benchmark_group("cvar_estimate");
    for m in [1_000usize, 100_000] {
        let samples: Vec<f64> = (0..m).map(|i| ((i * 7919) % m) as f64).collect();
        group.bench_function(format!("m={m}"), |b| {
            b.iter_batched(
                || samples.clone(),
                |s| cvar_estimate(&Edf::from_vec(s).unwrap(), level),
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

fn episode(c: &mut Criterion) {
    let params = ChainParams::default();
    let env = params.build().unwrap();
    let policy = SoftmaxPolicy::action_indicator(&env, Point::zeros(2)).unwrap();
    let mut rng = stream(2);
    c.bench_function("rollout_chain", |b| {
        b.iter(|| rollout(&env, &policy, params.start, &mut rng).unwrap())
    });
}

fn schedules(c: &mut Criterion) {
    c.bench_function("rsg_schedule_o2_4096", |b| {
        b.iter(|| rsg_schedule_o2(black_box(4096), 1.0, 1.0, 1.0, 1.0).unwrap())
    });
    c.bench_function("sgd_schedule_o2_4096", |b| {
        b.iter(|| sgd_schedule_o2(black_box(4096), 1.0, 1.0).unwrap())
    });
}

criterion_group!(benches, oracle_query, cvar, episode, schedules);
criterion_main!(benches);
