//! Randomized-output (RSG) and last-iterate (SGD) zeroth-order drivers.
//!
//! Both run `x_{k+1} = x_k - gamma_k g_k` for `k = 1..N`, where `g_k` is an
//! oracle estimate at `x_k` with `(eta_k, m_k)` from the schedule. RSG returns
//! `x_R` with `P(R = k) = gamma_k / sum_i gamma_i` over the iterates `x_1..x_N`
//! at which the oracle was queried; SGD returns `x_{N+1}`.

mod phase;
mod schedule;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::RngCore;
use serde::Serialize;

pub use phase::{phase_of, phase_plan, PhasePlan};
pub use schedule::{
    build_schedule, rsg_schedule_o1_const, rsg_schedule_o1_poly, rsg_schedule_o2, sgd_schedule_o1,
    sgd_schedule_o2, total_samples, Algorithm, IterationSchedule, ScheduleParams,
};

use crate::error::{Error, Result};
use crate::oracle::GradientOracle;
use crate::point::Point;
use crate::problems::Batch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Store every `stride`-th iterate (`x_1, x_{1+s}, ...`); `None` stores nothing.
    pub store_stride: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunTrace {
    pub iterates: Option<Vec<Point>>,
    /// `x_{N+1}`, the point after the last update.
    pub final_point: Point,
    /// `x_R` for RSG, `x_{N+1}` for SGD.
    pub returned_point: Point,
    /// `R` for RSG runs.
    pub selected_index: Option<usize>,
    /// Raw measurements (or episodes) consumed, `sum_k samples_used`.
    pub total_samples: Batch,
    /// `sum_k m_k`.
    pub batch_total: Batch,
    pub oracle_calls: usize,
}

/// Draws `k` in `1..=N` with probability `gamma_k / sum_i gamma_i`.
pub fn select_random_iterate(gammas: &[f64], rng: &mut dyn RngCore) -> Result<usize> {
    if gammas.is_empty() {
        return Err(Error::invalid("gammas", "need at least one weight"));
    }
    if gammas.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
        return Err(Error::invalid(
            "gammas",
            "weights must be positive and finite",
        ));
    }
    let dist = WeightedIndex::new(gammas).map_err(|e| Error::invalid("gammas", e.to_string()))?;
    Ok(dist.sample(rng) + 1)
}

fn run(
    oracle: &dyn GradientOracle,
    x1: Point,
    schedule: &IterationSchedule,
    opts: &RunOptions,
    selected: Option<usize>,
    rng: &mut dyn RngCore,
) -> Result<RunTrace> {
    x1.check_dim(oracle.dim())?;
    if opts.store_stride == Some(0) {
        return Err(Error::invalid("store_stride", "must be at least 1"));
    }
    let n = schedule.len();
    let mut x = x1;
    let mut iterates = opts.store_stride.map(|_| Vec::new());
    let mut chosen = None;
    let mut total: Batch = 0;
    for k in 1..=n {
        if let (Some(store), Some(s)) = (iterates.as_mut(), opts.store_stride) {
            if (k - 1) % s == 0 {
                store.push(x.clone());
            }
        }
        if selected == Some(k) {
            chosen = Some(x.clone());
        }
        let (gamma, eta, m) = schedule.at(k);
        let est = oracle.query(&x, eta, m, rng).map_err(|e| match e {
            Error::NonFinite(_) => Error::Divergence { iteration: k },
            other => other,
        })?;
        total += est.samples_used;
        x.descend(gamma, &est.grad);
        if !x.is_finite() {
            return Err(Error::Divergence { iteration: k });
        }
    }
    if let (Some(store), Some(s)) = (iterates.as_mut(), opts.store_stride) {
        if n.is_multiple_of(s) {
            store.push(x.clone());
        }
    }
    Ok(RunTrace {
        iterates,
        returned_point: chosen.unwrap_or_else(|| x.clone()),
        final_point: x,
        selected_index: selected,
        total_samples: total,
        batch_total: total_samples(schedule),
        oracle_calls: n,
    })
}

/// Randomized stochastic gradient with biased oracle. `R` is drawn before the
/// first update, so `x_R` is captured without storing the trajectory.
pub fn rsg_bgo(
    oracle: &dyn GradientOracle,
    x1: Point,
    schedule: &IterationSchedule,
    opts: &RunOptions,
    rng: &mut dyn RngCore,
) -> Result<RunTrace> {
    let r = select_random_iterate(schedule.gammas(), rng)?;
    run(oracle, x1, schedule, opts, Some(r), rng)
}

/// Last-iterate stochastic gradient with biased oracle.
pub fn sgd_bgo(
    oracle: &dyn GradientOracle,
    x1: Point,
    schedule: &IterationSchedule,
    opts: &RunOptions,
    rng: &mut dyn RngCore,
) -> Result<RunTrace> {
    run(oracle, x1, schedule, opts, None, rng)
}
