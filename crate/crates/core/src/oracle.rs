//! Biased zeroth-order gradient oracles.
//!
//! Both oracle models use the symmetric two-point estimator
//! `Delta (y+ - y-) / (2 eta)` over batch-`m` measurements at `x +- eta Delta`.
//! They differ in how the two measurements share randomness:
//!
//! * **O1** draws the measurement randomness independently at the two points.
//!   Zero-mean noise survives the difference and is amplified by `1/eta`, so
//!   the variance grows like `1/eta^2`.
//! * **O2** evaluates both points under one draw (common random numbers). The
//!   difference then only sees how the noise varies with the point, which the
//!   `1/(2 eta)` scaling turns into a directional derivative. The variance stays
//!   bounded as `eta -> 0`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Point;
use crate::problems::{Batch, MeasurementModel, Objective};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    Gaussian,
    Rademacher,
}

impl FromStr for PerturbationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gaussian" => Ok(PerturbationKind::Gaussian),
            "rademacher" => Ok(PerturbationKind::Rademacher),
            other => Err(Error::invalid(
                "perturbation",
                format!("unknown kind `{other}`"),
            )),
        }
    }
}

impl fmt::Display for PerturbationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PerturbationKind::Gaussian => "gaussian",
            PerturbationKind::Rademacher => "rademacher",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    O1,
    O2,
}

impl FromStr for OracleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "o1" => Ok(OracleKind::O1),
            "o2" => Ok(OracleKind::O2),
            other => Err(Error::invalid(
                "oracle",
                format!("unknown oracle `{other}`"),
            )),
        }
    }
}

impl fmt::Display for OracleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OracleKind::O1 => "o1",
            OracleKind::O2 => "o2",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub grad: Vec<f64>,
    /// Function-measurement samples consumed (`2m` for a two-point estimate).
    pub samples_used: Batch,
}

/// A stochastic first-order oracle queried with perturbation `eta` and batch `m`.
pub trait GradientOracle: Send + Sync {
    fn dim(&self) -> usize;

    fn query(
        &self,
        x: &Point,
        eta: f64,
        m: Batch,
        rng: &mut dyn RngCore,
    ) -> Result<GradientEstimate>;
}

pub fn draw_perturbation(kind: PerturbationKind, d: usize, rng: &mut dyn RngCore) -> Vec<f64> {
    assert!(d >= 1, "perturbation dimension must be at least 1");
    match kind {
        PerturbationKind::Gaussian => (0..d).map(|_| rng.sample(StandardNormal)).collect(),
        PerturbationKind::Rademacher => (0..d)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect(),
    }
}

/// Combines two measurements along `direction` into a gradient estimate.
pub fn combine(
    kind: PerturbationKind,
    direction: &[f64],
    y_plus: f64,
    y_minus: f64,
    eta: f64,
) -> Vec<f64> {
    let diff = y_plus - y_minus;
    match kind {
        PerturbationKind::Gaussian => direction.iter().map(|d| d * diff / (2.0 * eta)).collect(),
        PerturbationKind::Rademacher => direction.iter().map(|d| diff / (2.0 * eta * d)).collect(),
    }
}

fn check_query(x: &Point, dim: usize, eta: f64, m: Batch) -> Result<()> {
    x.check_dim(dim)?;
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::invalid("eta", "must be positive"));
    }
    if m == 0 {
        return Err(Error::invalid("m", "batch size must be at least 1"));
    }
    Ok(())
}

/// Two-point estimate with the direction held fixed. With `common` set, both
/// measurements share one draw of the measurement randomness.
#[allow(clippy::too_many_arguments)]
pub fn two_point_along(
    model: &MeasurementModel,
    x: &Point,
    direction: &[f64],
    eta: f64,
    m: Batch,
    kind: PerturbationKind,
    common: bool,
    rng: &mut dyn RngCore,
) -> Result<GradientEstimate> {
    check_query(x, model.dim(), eta, m)?;
    if direction.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: direction.len(),
        });
    }
    let plus = x.offset(eta, direction);
    let minus = x.offset(-eta, direction);
    let (y_plus, y_minus) = if common {
        let draw = model.draw(m, rng)?;
        (
            model.evaluate(plus.as_slice(), m, &draw)?,
            model.evaluate(minus.as_slice(), m, &draw)?,
        )
    } else {
        let dp = model.draw(m, rng)?;
        let dm = model.draw(m, rng)?;
        (
            model.evaluate(plus.as_slice(), m, &dp)?,
            model.evaluate(minus.as_slice(), m, &dm)?,
        )
    };
    Ok(GradientEstimate {
        grad: combine(kind, direction, y_plus, y_minus, eta),
        samples_used: 2 * m,
    })
}

/// Two-point estimate with a freshly drawn direction and independent measurements.
pub fn two_point_estimate(
    model: &MeasurementModel,
    x: &Point,
    eta: f64,
    m: Batch,
    kind: PerturbationKind,
    rng: &mut dyn RngCore,
) -> Result<GradientEstimate> {
    let direction = draw_perturbation(kind, model.dim(), rng);
    two_point_along(model, x, &direction, eta, m, kind, false, rng)
}

/// Two-point oracle over a biased measurement model.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasedOracle {
    pub model: MeasurementModel,
    pub kind: OracleKind,
    pub perturbation: PerturbationKind,
    /// Share the measurement draw between `x + eta Delta` and `x - eta Delta`.
    pub common_random_numbers: bool,
}

impl BiasedOracle {
    pub fn new(model: MeasurementModel, kind: OracleKind) -> Self {
        BiasedOracle {
            model,
            kind,
            perturbation: PerturbationKind::Gaussian,
            common_random_numbers: kind == OracleKind::O2,
        }
    }

    pub fn o1(model: MeasurementModel) -> Self {
        Self::new(model, OracleKind::O1)
    }

    pub fn o2(model: MeasurementModel) -> Self {
        Self::new(model, OracleKind::O2)
    }

    pub fn with_perturbation(mut self, kind: PerturbationKind) -> Self {
        self.perturbation = kind;
        self
    }

    pub fn with_common_random_numbers(mut self, on: bool) -> Self {
        self.common_random_numbers = on;
        self
    }
}

impl GradientOracle for BiasedOracle {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn query(
        &self,
        x: &Point,
        eta: f64,
        m: Batch,
        rng: &mut dyn RngCore,
    ) -> Result<GradientEstimate> {
        let direction = draw_perturbation(self.perturbation, self.dim(), rng);
        two_point_along(
            &self.model,
            x,
            &direction,
            eta,
            m,
            self.perturbation,
            self.common_random_numbers,
            rng,
        )
    }
}

/// Returns the exact gradient; accounts `2m` samples like a two-point oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactGradientOracle {
    pub objective: Objective,
}

impl GradientOracle for ExactGradientOracle {
    fn dim(&self) -> usize {
        self.objective.dim()
    }

    fn query(
        &self,
        x: &Point,
        eta: f64,
        m: Batch,
        _rng: &mut dyn RngCore,
    ) -> Result<GradientEstimate> {
        check_query(x, self.dim(), eta, m)?;
        Ok(GradientEstimate {
            grad: self.objective.grad(x.as_slice())?,
            samples_used: 2 * m,
        })
    }
}

/// Oracle defined by a closure of the query point.
pub struct FnOracle<F> {
    dim: usize,
    f: F,
}

impl<F> FnOracle<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnOracle { dim, f }
    }
}

impl<F> GradientOracle for FnOracle<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn query(
        &self,
        x: &Point,
        eta: f64,
        m: Batch,
        _rng: &mut dyn RngCore,
    ) -> Result<GradientEstimate> {
        check_query(x, self.dim, eta, m)?;
        let grad = (self.f)(x.as_slice());
        if grad.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: grad.len(),
            });
        }
        Ok(GradientEstimate {
            grad,
            samples_used: 2 * m,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleDiagnostics {
    /// `max_i |mean_i - true_grad_i|`.
    pub empirical_bias_sup: f64,
    /// Trace of the sample covariance, `sum_i var_i` with divisor `trials - 1`.
    pub empirical_variance: f64,
    pub trials: usize,
    /// Sample mean of the estimates.
    pub mean: Vec<f64>,
    /// Largest per-coordinate standard error of `mean`.
    pub mean_stderr_sup: f64,
}

/// Runs `oracle` `trials` times at `x` and summarizes bias and spread.
pub fn probe_oracle(
    oracle: &dyn GradientOracle,
    x: &Point,
    true_grad: &[f64],
    eta: f64,
    m: Batch,
    trials: usize,
    rng: &mut dyn RngCore,
) -> Result<OracleDiagnostics> {
    if trials < 2 {
        return Err(Error::invalid("trials", "need at least 2"));
    }
    let d = oracle.dim();
    if true_grad.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: true_grad.len(),
        });
    }
    // Welford, per coordinate
    let mut mean = vec![0.0; d];
    let mut m2 = vec![0.0; d];
    for t in 0..trials {
        let g = oracle.query(x, eta, m, rng)?.grad;
        let n = (t + 1) as f64;
        for i in 0..d {
            let delta = g[i] - mean[i];
            mean[i] += delta / n;
            m2[i] += delta * (g[i] - mean[i]);
        }
    }
    let denom = (trials - 1) as f64;
    let variance = m2.iter().sum::<f64>() / denom;
    let bias = mean
        .iter()
        .zip(true_grad)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let stderr = m2
        .iter()
        .map(|v| (v / denom / trials as f64).sqrt())
        .fold(0.0, f64::max);
    if !(bias.is_finite() && variance.is_finite()) {
        return Err(Error::NonFinite("oracle diagnostics"));
    }
    Ok(OracleDiagnostics {
        empirical_bias_sup: bias,
        empirical_variance: variance,
        trials,
        mean,
        mean_stderr_sup: stderr,
    })
}
