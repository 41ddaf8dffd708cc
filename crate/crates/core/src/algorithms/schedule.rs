use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::phase::phase_plan;
use crate::error::{Error, Result};
use crate::oracle::OracleKind;
use crate::problems::Batch;

/// Per-iteration step size, perturbation constant and batch size, `k = 1..N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationSchedule {
    gammas: Vec<f64>,
    etas: Vec<f64>,
    batches: Vec<Batch>,
}

impl IterationSchedule {
    pub fn new(gammas: Vec<f64>, etas: Vec<f64>, batches: Vec<Batch>) -> Result<Self> {
        let n = gammas.len();
        if n == 0 {
            return Err(Error::invalid("schedule", "needs at least one iteration"));
        }
        if etas.len() != n || batches.len() != n {
            return Err(Error::invalid(
                "schedule",
                "gammas, etas and batches differ in length",
            ));
        }
        if gammas.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
            return Err(Error::invalid(
                "gamma",
                "step sizes must be positive and finite",
            ));
        }
        if etas.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::invalid(
                "eta",
                "perturbation constants must be positive and finite",
            ));
        }
        if batches.contains(&0) {
            return Err(Error::invalid("m", "batch sizes must be at least 1"));
        }
        Ok(IterationSchedule {
            gammas,
            etas,
            batches,
        })
    }

    pub fn constant(n: usize, gamma: f64, eta: f64, m: Batch) -> Result<Self> {
        Self::new(vec![gamma; n], vec![eta; n], vec![m; n])
    }

    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn etas(&self) -> &[f64] {
        &self.etas
    }

    pub fn batches(&self) -> &[Batch] {
        &self.batches
    }

    /// `(gamma_k, eta_k, m_k)` for 1-based `k`.
    pub fn at(&self, k: usize) -> (f64, f64, Batch) {
        (self.gammas[k - 1], self.etas[k - 1], self.batches[k - 1])
    }
}

/// `sum_k m_k`.
pub fn total_samples(schedule: &IterationSchedule) -> Batch {
    schedule.batches.iter().sum()
}

fn positive(name: &'static str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::invalid(name, "must be positive and finite"))
    }
}

fn ceil_batch(v: f64) -> Result<Batch> {
    if !(v.is_finite() && v < 1e36) {
        return Err(Error::invalid("m", "batch size overflows"));
    }
    Ok((v.ceil() as Batch).max(1))
}

fn rsg_o1_steps(n: usize, gamma0: f64, eta0: f64, lipschitz: f64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::invalid("N", "budget must be at least 1"));
    }
    let nf = n as f64;
    let gamma = (1.0 / positive("lipschitz", lipschitz)?)
        .min(positive("gamma0", gamma0)? / nf.powf(2.0 / 3.0));
    Ok((gamma, positive("eta0", eta0)? / nf.powf(1.0 / 6.0)))
}

/// `gamma = min(1/L, gamma0 / N^(2/3))`, `eta = eta0 / N^(1/6)`, `m = ceil(m0 N)`.
pub fn rsg_schedule_o1_const(
    n: usize,
    gamma0: f64,
    eta0: f64,
    m0: f64,
    lipschitz: f64,
) -> Result<IterationSchedule> {
    let (gamma, eta) = rsg_o1_steps(n, gamma0, eta0, lipschitz)?;
    let m = ceil_batch(positive("m0", m0)? * n as f64)?;
    IterationSchedule::constant(n, gamma, eta, m)
}

/// As [`rsg_schedule_o1_const`] with growing batches `m_k = ceil(m0 k^beta)`.
pub fn rsg_schedule_o1_poly(
    n: usize,
    gamma0: f64,
    eta0: f64,
    m0: f64,
    lipschitz: f64,
    beta: f64,
) -> Result<IterationSchedule> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::invalid("beta", "must lie in (0, 1)"));
    }
    let (gamma, eta) = rsg_o1_steps(n, gamma0, eta0, lipschitz)?;
    let m0 = positive("m0", m0)?;
    let batches = (1..=n)
        .map(|k| ceil_batch(m0 * (k as f64).powf(beta)))
        .collect::<Result<Vec<_>>>()?;
    IterationSchedule::new(vec![gamma; n], vec![eta; n], batches)
}

/// `gamma = min(1/L, gamma0 / sqrt N)`, `eta = eta0 / sqrt N`, `m = ceil(m0 N^2)`.
pub fn rsg_schedule_o2(
    n: usize,
    gamma0: f64,
    eta0: f64,
    m0: f64,
    lipschitz: f64,
) -> Result<IterationSchedule> {
    if n == 0 {
        return Err(Error::invalid("N", "budget must be at least 1"));
    }
    let nf = n as f64;
    let gamma =
        (1.0 / positive("lipschitz", lipschitz)?).min(positive("gamma0", gamma0)? / nf.sqrt());
    let eta = positive("eta0", eta0)? / nf.sqrt();
    let m = ceil_batch(positive("m0", m0)? * nf * nf)?;
    IterationSchedule::constant(n, gamma, eta, m)
}

fn phased(
    n: usize,
    gamma0: f64,
    eta0: f64,
    per_phase: impl Fn(usize, f64, f64) -> Result<(f64, f64, Batch)>,
) -> Result<IterationSchedule> {
    let plan = phase_plan(n)?;
    let (gamma0, eta0) = (positive("gamma0", gamma0)?, positive("eta0", eta0)?);
    let mut gammas = Vec::with_capacity(n);
    let mut etas = Vec::with_capacity(n);
    let mut batches = Vec::with_capacity(n);
    for i in 0..plan.phases() {
        let (g, e, m) = per_phase(i, gamma0, eta0)?;
        for _ in 0..plan.phase_len(i) {
            gammas.push(g);
            etas.push(e);
            batches.push(m);
        }
    }
    IterationSchedule::new(gammas, etas, batches)
}

/// In phase `i`: `gamma = gamma0 2^-i / N^(2/3)`, `eta = eta0 2^(-i/4) / N^(1/6)`, `m = 2^i N`.
pub fn sgd_schedule_o1(n: usize, gamma0: f64, eta0: f64) -> Result<IterationSchedule> {
    let nf = n as f64;
    phased(n, gamma0, eta0, |i, g0, e0| {
        let half = 0.5f64.powi(i as i32);
        let m = (n as Batch)
            .checked_mul(1 << i)
            .ok_or_else(|| Error::invalid("m", "batch size overflows"))?;
        Ok((
            g0 * half / nf.powf(2.0 / 3.0),
            e0 * half.powf(0.25) / nf.powf(1.0 / 6.0),
            m,
        ))
    })
}

/// In phase `i`: `gamma = gamma0 2^-i / sqrt N`, `eta = eta0 2^-i / N`, `m = 8^i N^3`.
pub fn sgd_schedule_o2(n: usize, gamma0: f64, eta0: f64) -> Result<IterationSchedule> {
    let nf = n as f64;
    phased(n, gamma0, eta0, |i, g0, e0| {
        let half = 0.5f64.powi(i as i32);
        let nb = n as Batch;
        let m = nb
            .checked_pow(3)
            .and_then(|n3| n3.checked_mul(1u128.checked_shl(3 * i as u32)?))
            .ok_or_else(|| Error::invalid("m", "batch size overflows"))?;
        Ok((g0 * half / nf.sqrt(), e0 * half / nf, m))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Rsg,
    Sgd,
    RiskPg,
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "rsg" => Ok(Algorithm::Rsg),
            "sgd" => Ok(Algorithm::Sgd),
            "riskpg" => Ok(Algorithm::RiskPg),
            other => Err(Error::invalid(
                "algo",
                format!("unknown algorithm `{other}`"),
            )),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Rsg => "rsg",
            Algorithm::Sgd => "sgd",
            Algorithm::RiskPg => "riskpg",
        })
    }
}

/// Free constants of the schedules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScheduleParams {
    pub gamma0: f64,
    pub eta0: f64,
    pub m0: f64,
    pub lipschitz: f64,
    /// Growing-batch exponent for the RSG O1 schedule; `None` for constant batches.
    pub beta: Option<f64>,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        ScheduleParams {
            gamma0: 1.0,
            eta0: 1.0,
            m0: 1.0,
            lipschitz: 1.0,
            beta: None,
        }
    }
}

/// The schedule for `algo` under `oracle` with budget `n`. Risk-PG runs the RSG schedules.
pub fn build_schedule(
    algo: Algorithm,
    oracle: OracleKind,
    n: usize,
    p: &ScheduleParams,
) -> Result<IterationSchedule> {
    match (algo, oracle) {
        (Algorithm::Rsg | Algorithm::RiskPg, OracleKind::O1) => match p.beta {
            Some(beta) => rsg_schedule_o1_poly(n, p.gamma0, p.eta0, p.m0, p.lipschitz, beta),
            None => rsg_schedule_o1_const(n, p.gamma0, p.eta0, p.m0, p.lipschitz),
        },
        (Algorithm::Rsg | Algorithm::RiskPg, OracleKind::O2) => {
            rsg_schedule_o2(n, p.gamma0, p.eta0, p.m0, p.lipschitz)
        }
        (Algorithm::Sgd, OracleKind::O1) => sgd_schedule_o1(n, p.gamma0, p.eta0),
        (Algorithm::Sgd, OracleKind::O2) => sgd_schedule_o2(n, p.gamma0, p.eta0),
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn rsg_o1_examples() {
        let s = rsg_schedule_o1_const(64, 1.0, 1.0, 1.0, 1.0).unwrap();
        let (g, e, m) = s.at(1);
        assert!(close(g, 1.0 / 16.0) && close(e, 0.5) && m == 64);
        let s = rsg_schedule_o1_const(64, 1.0, 1.0, 1.0, 1000.0).unwrap();
        assert!(close(s.at(64).0, 1e-3));
        let s = rsg_schedule_o1_const(1, 0.5, 0.3, 2.5, 1.0).unwrap();
        assert_eq!(s.at(1), (0.5, 0.3, 3));
        assert!(rsg_schedule_o1_const(0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(rsg_schedule_o1_const(4, -1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn rsg_o1_poly_examples() {
        let s = rsg_schedule_o1_poly(9, 1.0, 1.0, 1.0, 1.0, 0.5).unwrap();
        assert_eq!((s.at(1).2, s.at(4).2, s.at(9).2), (1, 2, 3));
        let s = rsg_schedule_o1_poly(4, 1.0, 1.0, 1.0, 1.0, 0.5).unwrap();
        assert!(close(s.at(1).0, 4f64.powf(-2.0 / 3.0)));
        assert!(close(s.at(1).1, 4f64.powf(-1.0 / 6.0)));
        assert_eq!(s.batches(), &[1, 2, 2, 2]);
        assert!(rsg_schedule_o1_poly(4, 1.0, 1.0, 1.0, 1.0, 0.0).is_err());
        assert!(rsg_schedule_o1_poly(4, 1.0, 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn rsg_o2_examples() {
        let s = rsg_schedule_o2(16, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(s.at(3), (0.25, 0.25, 256));
        assert_eq!(total_samples(&s), 16u128.pow(3));
        let s = rsg_schedule_o2(1, 2.0, 0.7, 1.2, 1.0).unwrap();
        assert_eq!(s.at(1), (1.0, 0.7, 2));
    }

    #[test]
    fn sgd_o1_examples() {
        let s = sgd_schedule_o1(16, 1.0, 1.0).unwrap();
        let (g1, e1, m1) = s.at(1);
        assert!(close(g1, 16f64.powf(-2.0 / 3.0)) && close(e1, 16f64.powf(-1.0 / 6.0)) && m1 == 16);
        let (g9, e9, m9) = s.at(9);
        assert!(close(g9, g1 / 2.0) && close(e9, 2f64.powf(-0.25) * e1) && m9 == 32);
        assert_eq!(total_samples(&s), 768);
    }

    #[test]
    fn sgd_o2_examples() {
        let s = sgd_schedule_o2(4, 1.0, 1.0).unwrap();
        assert_eq!(s.at(1), (0.5, 0.25, 64));
        assert_eq!(s.at(3), (0.25, 0.125, 512));
        assert_eq!(s.at(4), (0.125, 0.0625, 4096));
        for w in s.etas().windows(2) {
            assert!(w[1] == w[0] || w[1] == w[0] / 2.0);
        }
        let ns = [4usize, 8, 16, 32];
        let lx: Vec<f64> = ns.iter().map(|n| (*n as f64).ln()).collect();
        let ly: Vec<f64> = ns
            .iter()
            .map(|n| (total_samples(&sgd_schedule_o2(*n, 1.0, 1.0).unwrap()) as f64).ln())
            .collect();
        let mx = lx.iter().sum::<f64>() / 4.0;
        let my = ly.iter().sum::<f64>() / 4.0;
        let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
        assert!((sxy / sxx - 6.0).abs() <= 0.3, "{}", sxy / sxx);
    }

    #[test]
    fn large_budgets_do_not_overflow() {
        let s = sgd_schedule_o2(4096, 1.0, 1.0).unwrap();
        assert_eq!(
            *s.batches().last().unwrap(),
            4096u128.pow(3) * 8u128.pow(12)
        );
    }

    #[test]
    fn accounting_closed_forms() {
        assert_eq!(
            total_samples(&IterationSchedule::new(vec![1.0], vec![1.0], vec![7]).unwrap()),
            7
        );
        for n in [1usize, 5, 64, 1000] {
            let s = rsg_schedule_o1_const(n, 1.0, 1.0, 1.0, 1.0).unwrap();
            assert_eq!(total_samples(&s), (n * n) as Batch);
            let s = rsg_schedule_o1_const(n, 1.0, 1.0, 3.0, 1.0).unwrap();
            assert_eq!(total_samples(&s), (3 * n * n) as Batch);
        }
    }

    #[test]
    fn schedule_validation() {
        assert!(IterationSchedule::new(vec![], vec![], vec![]).is_err());
        assert!(IterationSchedule::new(vec![1.0], vec![1.0, 1.0], vec![1]).is_err());
        assert!(IterationSchedule::new(vec![0.0], vec![1.0], vec![1]).is_err());
        assert!(IterationSchedule::new(vec![1.0], vec![1.0], vec![0]).is_err());
    }

    proptest! {
        #[test]
        fn sgd_schedules_decay(n in 1usize..3000, g0 in 0.01f64..10.0, e0 in 0.01f64..10.0) {
            for s in [sgd_schedule_o1(n, g0, e0).unwrap(), sgd_schedule_o2(n, g0, e0).unwrap()] {
                prop_assert_eq!(s.len(), n);
                for k in 1..n {
                    let (a, b) = (s.at(k), s.at(k + 1));
                    prop_assert!(b.0 <= a.0 && b.1 <= a.1 && b.2 >= a.2);
                }
                prop_assert!(s.gammas().iter().all(|g| *g > 0.0));
            }
        }
    }
}
