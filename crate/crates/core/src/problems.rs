//! Synthetic objectives with analytic values and gradients, and the biased
//! measurement model that turns them into noisy, batch-dependent function
//! evaluations.
//!
//! A measurement of `f` at `z` with batch size `m` is
//!
//! ```text
//! y(z, m) = f(z) + noise_std * xi_0 + grad_noise_std * <xi_1, z> + eps(z, m)
//! ```
//!
//! where `xi_0 ~ N(0, 1)`, `xi_1 ~ N(0, I)` and `eps` is the positive
//! estimation error. The random parts are drawn into a [`MeasurementDraw`]
//! first and applied second, so that two measurements can share one draw
//! (common random numbers).

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{dot, Point};
use crate::risk::{cvar_estimate, gaussian_cvar_reference, Edf, RiskLevel};

/// Integer batch size. Some schedules grow as `8^i N^3`, which overflows `u64`
/// for realistic budgets.
pub type Batch = u128;

/// Largest batch for which the CVaR measurement model will draw explicit samples.
pub const MAX_SAMPLED_BATCH: Batch = 50_000_000;

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    /// `1/2 (x - c)^T A (x - c)`, `A` stored row-major.
    Quadratic {
        a: Vec<f64>,
        lipschitz: f64,
    },
    PseudoHuber,
    BoundedNonconvex,
    Quartic,
}

/// An objective with exact value, gradient and minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    kind: Kind,
    center: Vec<f64>,
}

impl Objective {
    /// `1/2 (x - center)^T A (x - center)` for symmetric positive semidefinite `A` (row-major).
    pub fn quadratic(a: Vec<f64>, center: Vec<f64>) -> Result<Self> {
        let d = center.len();
        check_center(&center)?;
        if a.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                got: a.len(),
            });
        }
        let m = DMatrix::from_row_slice(d, d, &a);
        if (&m - m.transpose()).amax() > 1e-12 {
            return Err(Error::invalid("quadratic", "matrix is not symmetric"));
        }
        let eig = SymmetricEigen::new(m).eigenvalues;
        if eig.min() < -1e-12 {
            return Err(Error::invalid(
                "quadratic",
                "matrix is not positive semidefinite",
            ));
        }
        Ok(Objective {
            kind: Kind::Quadratic {
                a,
                lipschitz: eig.max(),
            },
            center,
        })
    }

    pub fn identity_quadratic(center: Vec<f64>) -> Result<Self> {
        let d = center.len();
        let mut a = vec![0.0; d * d];
        for i in 0..d {
            a[i * d + i] = 1.0;
        }
        Self::quadratic(a, center)
    }

    /// `sum_i sqrt(1 + (x_i - c_i)^2) - 1`: convex, `|df/dx_i| < 1`.
    pub fn pseudo_huber(center: Vec<f64>) -> Result<Self> {
        check_center(&center)?;
        Ok(Objective {
            kind: Kind::PseudoHuber,
            center,
        })
    }

    /// `sum_i u_i^2 / (1 + u_i^2)` with `u = x - c`: nonconvex, bounded gradient,
    /// unique global minimum at `c`.
    pub fn bounded_nonconvex(center: Vec<f64>) -> Result<Self> {
        check_center(&center)?;
        Ok(Objective {
            kind: Kind::BoundedNonconvex,
            center,
        })
    }

    /// `sum_i (x_i - c_i)^4`. Not globally smooth; used for probing the
    /// curvature-driven bias of the two-point estimators.
    pub fn quartic(center: Vec<f64>) -> Result<Self> {
        check_center(&center)?;
        Ok(Objective {
            kind: Kind::Quartic,
            center,
        })
    }

    /// Named objective in `dim` dimensions centered at the origin (quadratic uses `A = I`).
    pub fn by_name(name: &str, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        let c = vec![0.0; dim];
        match name {
            "quadratic" => Self::identity_quadratic(c),
            "pseudo_huber" => Self::pseudo_huber(c),
            "bounded_nonconvex" => Self::bounded_nonconvex(c),
            "quartic" => Self::quartic(c),
            other => Err(Error::invalid(
                "objective",
                format!("unknown objective `{other}`"),
            )),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            Kind::Quadratic { .. } => "quadratic",
            Kind::PseudoHuber => "pseudo_huber",
            Kind::BoundedNonconvex => "bounded_nonconvex",
            Kind::Quartic => "quartic",
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn minimizer(&self) -> &[f64] {
        &self.center
    }

    /// `f(x*)`; every kind here attains zero at its center.
    pub fn min_value(&self) -> f64 {
        0.0
    }

    /// Lipschitz constant of the gradient, when one exists globally.
    pub fn smoothness(&self) -> Option<f64> {
        match &self.kind {
            Kind::Quadratic { lipschitz, .. } => Some(*lipschitz),
            Kind::PseudoHuber => Some(1.0),
            // sup |d^2/du^2 u^2/(1+u^2)| = 2, attained at u = 0
            Kind::BoundedNonconvex => Some(2.0),
            Kind::Quartic => None,
        }
    }

    pub fn is_convex(&self) -> bool {
        !matches!(self.kind, Kind::BoundedNonconvex)
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(self.value_unchecked(x))
    }

    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        Ok(self.grad_unchecked(x))
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    fn offsets<'a>(&'a self, x: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        x.iter().zip(&self.center).map(|(xi, ci)| xi - ci)
    }

    pub(crate) fn value_unchecked(&self, x: &[f64]) -> f64 {
        match &self.kind {
            Kind::Quadratic { a, .. } => {
                let u: Vec<f64> = self.offsets(x).collect();
                let d = u.len();
                let mut acc = 0.0;
                for i in 0..d {
                    acc += u[i] * dot(&a[i * d..(i + 1) * d], &u);
                }
                0.5 * acc
            }
            Kind::PseudoHuber => self.offsets(x).map(|u| (1.0 + u * u).sqrt() - 1.0).sum(),
            Kind::BoundedNonconvex => self.offsets(x).map(|u| u * u / (1.0 + u * u)).sum(),
            Kind::Quartic => self.offsets(x).map(|u| u.powi(4)).sum(),
        }
    }

    pub(crate) fn grad_unchecked(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            Kind::Quadratic { a, .. } => {
                let u: Vec<f64> = self.offsets(x).collect();
                let d = u.len();
                (0..d).map(|i| dot(&a[i * d..(i + 1) * d], &u)).collect()
            }
            Kind::PseudoHuber => self.offsets(x).map(|u| u / (1.0 + u * u).sqrt()).collect(),
            Kind::BoundedNonconvex => self
                .offsets(x)
                .map(|u| 2.0 * u / (1.0 + u * u).powi(2))
                .collect(),
            Kind::Quartic => self.offsets(x).map(|u| 4.0 * u.powi(3)).collect(),
        }
    }
}

fn check_center(c: &[f64]) -> Result<()> {
    if c.is_empty() {
        return Err(Error::invalid("dim", "must be at least 1"));
    }
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("objective center"));
    }
    Ok(())
}

/// Central finite differences of the exact value function.
pub fn finite_diff_grad(obj: &Objective, x: &[f64], h: f64) -> Result<Vec<f64>> {
    if h.is_nan() || h <= 0.0 {
        return Err(Error::invalid("h", "must be positive"));
    }
    obj.check(x)?;
    let mut probe = x.to_vec();
    Ok((0..x.len())
        .map(|i| {
            let xi = probe[i];
            probe[i] = xi + h;
            let up = obj.value_unchecked(&probe);
            probe[i] = xi - h;
            let down = obj.value_unchecked(&probe);
            probe[i] = xi;
            (up - down) / (2.0 * h)
        })
        .collect())
}

/// CVaR at level `alpha` of `N(mu(x), sigma^2)`, with `mu` given by a base objective.
#[derive(Debug, Clone, PartialEq)]
pub struct CvarObjective {
    pub base: Objective,
    pub sigma: f64,
    pub level: RiskLevel,
}

impl CvarObjective {
    pub fn new(base: Objective, sigma: f64, level: RiskLevel) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid("sigma", "must be positive"));
        }
        Ok(CvarObjective { base, sigma, level })
    }

    /// Offset between the CVaR and the base mean, constant in `x`.
    pub fn risk_premium(&self) -> f64 {
        gaussian_cvar_reference(0.0, self.sigma, self.level).expect("sigma checked at construction")
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.base.value(x)? + self.risk_premium())
    }

    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.base.grad(x)
    }

    /// Plug-in CVaR estimate over `m` fresh samples of `N(mu(x), sigma^2)`.
    pub fn measure(&self, x: &[f64], m: Batch, rng: &mut dyn RngCore) -> Result<f64> {
        let mu = self.base.value(x)?;
        let z = standard_normals(sampled_batch(m)?, rng);
        self.estimate_from(mu, &z)
    }

    fn estimate_from(&self, mu: f64, z: &[f64]) -> Result<f64> {
        let edf = Edf::from_vec(z.iter().map(|zi| mu + self.sigma * zi).collect())?;
        Ok(cvar_estimate(&edf, self.level))
    }
}

fn sampled_batch(m: Batch) -> Result<usize> {
    if m == 0 {
        return Err(Error::invalid("m", "batch size must be at least 1"));
    }
    if m > MAX_SAMPLED_BATCH {
        return Err(Error::invalid(
            "m",
            format!("batch {m} too large for an explicitly sampled measurement"),
        ));
    }
    Ok(m as usize)
}

fn standard_normals(n: usize, rng: &mut dyn RngCore) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// How the positive estimation error `eps(m)` is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    None,
    /// `c_e / sqrt(m)` exactly.
    DeterministicPositive,
    /// `c_e |Z| / sqrt(m)`, `Z ~ N(0, 1)`.
    HalfNormal,
    /// The measurement is the plug-in CVaR of `m` samples of `N(f(z), c_e^2)`.
    CvarEstimator,
}

impl FromStr for ErrorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "none" => Ok(ErrorKind::None),
            "deterministic_positive" => Ok(ErrorKind::DeterministicPositive),
            "half_normal" => Ok(ErrorKind::HalfNormal),
            "cvar_estimator" => Ok(ErrorKind::CvarEstimator),
            other => Err(Error::invalid(
                "error_kind",
                format!("unknown error kind `{other}`"),
            )),
        }
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorKind::None => "none",
            ErrorKind::DeterministicPositive => "deterministic_positive",
            ErrorKind::HalfNormal => "half_normal",
            ErrorKind::CvarEstimator => "cvar_estimator",
        })
    }
}

/// Biased noisy function measurements of an [`Objective`].
///
/// `error_tilt` makes the estimation error position dependent: the
/// deterministic and half-normal errors are scaled by `exp(tilt * sum_i z_i)`.
/// At zero tilt they are exactly `c_e / sqrt(m)` and `c_e |Z| / sqrt(m)`. A
/// position-independent error cancels in expectation from any symmetric
/// difference, so a nonzero tilt is what lets the error bias a gradient
/// estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementModel {
    pub objective: Objective,
    pub noise_std: f64,
    pub grad_noise_std: f64,
    pub error_kind: ErrorKind,
    pub error_coeff: f64,
    pub error_tilt: f64,
    /// Level used by [`ErrorKind::CvarEstimator`].
    pub cvar_level: RiskLevel,
}

/// The random part of one measurement, drawn before the measurement point is known.
#[derive(Debug, Clone)]
pub struct MeasurementDraw {
    scalar: f64,
    linear: Vec<f64>,
    error_z: f64,
    cvar: Vec<f64>,
}

impl MeasurementModel {
    /// Exact measurements: no noise, no estimation error.
    pub fn exact(objective: Objective) -> Self {
        MeasurementModel {
            objective,
            noise_std: 0.0,
            grad_noise_std: 0.0,
            error_kind: ErrorKind::None,
            error_coeff: 0.0,
            error_tilt: 0.0,
            cvar_level: RiskLevel::new(0.9).unwrap(),
        }
    }

    pub fn with_noise(mut self, noise_std: f64) -> Self {
        self.noise_std = noise_std;
        self
    }

    pub fn with_grad_noise(mut self, grad_noise_std: f64) -> Self {
        self.grad_noise_std = grad_noise_std;
        self
    }

    pub fn with_error(mut self, kind: ErrorKind, coeff: f64) -> Self {
        self.error_kind = kind;
        self.error_coeff = coeff;
        self
    }

    pub fn with_error_tilt(mut self, tilt: f64) -> Self {
        self.error_tilt = tilt;
        self
    }

    pub fn with_cvar_level(mut self, level: RiskLevel) -> Self {
        self.cvar_level = level;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("noise_std", self.noise_std),
            ("grad_noise_std", self.grad_noise_std),
            ("error_coeff", self.error_coeff),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, "must be finite and nonnegative"));
            }
        }
        if !self.error_tilt.is_finite() {
            return Err(Error::invalid("error_tilt", "must be finite"));
        }
        if self.error_kind == ErrorKind::CvarEstimator
            && (self.error_coeff.is_nan() || self.error_coeff <= 0.0)
        {
            return Err(Error::invalid(
                "error_coeff",
                "cvar_estimator needs a positive scale",
            ));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    /// The quantity the measurements estimate.
    pub fn true_value(&self, x: &[f64]) -> Result<f64> {
        let f = self.objective.value(x)?;
        Ok(match self.error_kind {
            ErrorKind::CvarEstimator => {
                f + gaussian_cvar_reference(0.0, self.error_coeff, self.cvar_level)?
            }
            _ => f,
        })
    }

    pub fn true_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.objective.grad(x)
    }

    pub fn draw(&self, m: Batch, rng: &mut dyn RngCore) -> Result<MeasurementDraw> {
        if m == 0 {
            return Err(Error::invalid("m", "batch size must be at least 1"));
        }
        let scalar = if self.noise_std > 0.0 {
            rng.sample(StandardNormal)
        } else {
            0.0
        };
        let linear = if self.grad_noise_std > 0.0 {
            standard_normals(self.dim(), rng)
        } else {
            Vec::new()
        };
        let (error_z, cvar) = match self.error_kind {
            ErrorKind::HalfNormal => (rng.sample(StandardNormal), Vec::new()),
            ErrorKind::CvarEstimator => (0.0, standard_normals(sampled_batch(m)?, rng)),
            ErrorKind::None | ErrorKind::DeterministicPositive => (0.0, Vec::new()),
        };
        Ok(MeasurementDraw {
            scalar,
            linear,
            error_z,
            cvar,
        })
    }

    /// Applies a draw at point `z`.
    pub fn evaluate(&self, z: &[f64], m: Batch, draw: &MeasurementDraw) -> Result<f64> {
        let f = self.objective.value(z)?;
        let mut y = self.noise_std * draw.scalar;
        if !draw.linear.is_empty() {
            y += self.grad_noise_std * dot(&draw.linear, z);
        }
        let scale = || (self.error_tilt * z.iter().sum::<f64>()).exp() / (m as f64).sqrt();
        y += match self.error_kind {
            ErrorKind::None => f,
            ErrorKind::DeterministicPositive => f + self.error_coeff * scale(),
            ErrorKind::HalfNormal => f + self.error_coeff * draw.error_z.abs() * scale(),
            ErrorKind::CvarEstimator => {
                let edf = Edf::from_vec(
                    draw.cvar
                        .iter()
                        .map(|zi| f + self.error_coeff * zi)
                        .collect(),
                )?;
                cvar_estimate(&edf, self.cvar_level)
            }
        };
        if !y.is_finite() {
            return Err(Error::NonFinite("objective measurement"));
        }
        Ok(y)
    }

    pub fn measure(&self, z: &[f64], m: Batch, rng: &mut dyn RngCore) -> Result<f64> {
        let draw = self.draw(m, rng)?;
        self.evaluate(z, m, &draw)
    }

    /// Mean of `eps(m)` at `z` for the injected error kinds (zero for `None`).
    pub fn expected_error(&self, z: &[f64], m: Batch) -> f64 {
        let scale = (self.error_tilt * z.iter().sum::<f64>()).exp() / (m as f64).sqrt();
        match self.error_kind {
            ErrorKind::None | ErrorKind::CvarEstimator => 0.0,
            ErrorKind::DeterministicPositive => self.error_coeff * scale,
            ErrorKind::HalfNormal => self.error_coeff * (2.0 / std::f64::consts::PI).sqrt() * scale,
        }
    }
}

/// Convenience used by metrics: `||grad f(x)||^2`.
pub fn grad_norm_sq(obj: &Objective, x: &Point) -> Result<f64> {
    Ok(obj.grad(x.as_slice())?.iter().map(|g| g * g).sum())
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn uniform_points(d: usize, n: usize, scale: f64, seed: u64) -> Vec<Vec<f64>> {
        let mut r = rng(seed);
        (0..n)
            .map(|_| {
                (0..d)
                    .map(|_| scale * (2.0 * r.random::<f64>() - 1.0))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn analytic_examples() {
        let q = Objective::identity_quadratic(vec![0.0, 0.0]).unwrap();
        assert_eq!(q.value(&[3.0, 4.0]).unwrap(), 12.5);
        assert_eq!(q.grad(&[3.0, 4.0]).unwrap(), vec![3.0, 4.0]);

        let ph = Objective::pseudo_huber(vec![0.0, 0.0]).unwrap();
        assert_eq!(ph.value(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(ph.grad(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);

        let bn = Objective::bounded_nonconvex(vec![0.0]).unwrap();
        assert_eq!(bn.value(&[1.0]).unwrap(), 0.5);
        assert_eq!(bn.grad(&[1.0]).unwrap(), vec![0.5]);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let q = Objective::by_name("quadratic", 3).unwrap();
        assert!(matches!(
            q.value(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 3,
                got: 1
            })
        ));
        assert!(q.grad(&[1.0, 2.0]).is_err());
        assert!(Objective::by_name("rosenbrock", 2).is_err());
        assert!(Objective::by_name("quadratic", 0).is_err());
    }

    #[test]
    fn quadratic_validation() {
        assert!(Objective::quadratic(vec![1.0, 2.0, 0.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(Objective::quadratic(vec![1.0, 0.0, 0.0, -1.0], vec![0.0, 0.0]).is_err());
        assert!(Objective::quadratic(vec![1.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn finite_difference_examples() {
        let q = Objective::identity_quadratic(vec![0.0, 0.0]).unwrap();
        let g = finite_diff_grad(&q, &[1.0, 0.0], 1e-5).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-6 && g[1].abs() < 1e-6);

        let ph = Objective::pseudo_huber(vec![0.5, -0.5]).unwrap();
        let g = finite_diff_grad(&ph, &[0.5, -0.5], 1e-5).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-6));

        let bn = Objective::bounded_nonconvex(vec![0.0]).unwrap();
        assert!((finite_diff_grad(&bn, &[1.0], 1e-5).unwrap()[0] - 0.5).abs() < 1e-6);
        assert!(finite_diff_grad(&bn, &[1.0], 0.0).is_err());
    }

    fn objectives(d: usize) -> Vec<Objective> {
        let c: Vec<f64> = (0..d).map(|i| 0.3 * i as f64 - 0.4).collect();
        let mut a = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                a[i * d + j] = if i == j { 2.0 + i as f64 } else { 0.3 };
            }
        }
        vec![
            Objective::quadratic(a, c.clone()).unwrap(),
            Objective::pseudo_huber(c.clone()).unwrap(),
            Objective::bounded_nonconvex(c.clone()).unwrap(),
            Objective::quartic(c).unwrap(),
        ]
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        for obj in objectives(4) {
            for x in uniform_points(4, 100, 2.0, 11) {
                let g = obj.grad(&x).unwrap();
                let fd = finite_diff_grad(&obj, &x, 1e-5).unwrap();
                let err = g
                    .iter()
                    .zip(&fd)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                assert!(err <= 1e-5, "{}: {err}", obj.name());
            }
        }
    }

    #[test]
    fn bounded_gradient_witness() {
        for obj in objectives(5)
            .into_iter()
            .filter(|o| matches!(o.name(), "pseudo_huber" | "bounded_nonconvex"))
        {
            for x in uniform_points(5, 10_000, 20.0, 12) {
                let l1: f64 = obj.grad(&x).unwrap().iter().map(|g| g.abs()).sum();
                assert!(l1 <= 5.0, "{}: {l1}", obj.name());
            }
        }
    }

    #[test]
    fn quadratic_smoothness_is_the_top_eigenvalue() {
        let d = 4;
        let obj = &objectives(d)[0];
        let Kind::Quadratic { a, .. } = &obj.kind else {
            unreachable!()
        };
        // power iteration as an independent oracle
        let mut v = vec![1.0; d];
        let mut lambda = 0.0;
        for _ in 0..500 {
            let w: Vec<f64> = (0..d).map(|i| dot(&a[i * d..(i + 1) * d], &v)).collect();
            let n = dot(&w, &w).sqrt();
            lambda = dot(&v, &w) / dot(&v, &v);
            v = w.iter().map(|x| x / n).collect();
        }
        assert!((obj.smoothness().unwrap() - lambda).abs() < 1e-9);
    }

    #[test]
    fn minimum_witnesses() {
        for obj in objectives(3).into_iter().filter(Objective::is_convex) {
            let fmin = obj.value(obj.minimizer()).unwrap();
            assert_eq!(fmin, obj.min_value());
            for x in uniform_points(3, 10_000, 5.0, 13) {
                assert!(obj.value(&x).unwrap() >= fmin);
            }
        }
        let bn = &objectives(3)[2];
        assert!(bn.grad(bn.minimizer()).unwrap().iter().all(|g| *g == 0.0));
    }

    #[test]
    fn measurement_examples() {
        let q = Objective::identity_quadratic(vec![0.0, 0.0]).unwrap();
        let x = [1.0, 2.0];
        let exact = MeasurementModel::exact(q.clone());
        assert_eq!(exact.measure(&x, 7, &mut rng(1)).unwrap(), 2.5);
        let det = MeasurementModel::exact(q).with_error(ErrorKind::DeterministicPositive, 2.0);
        assert_eq!(det.measure(&x, 4, &mut rng(1)).unwrap(), 3.5);
        assert!(det.measure(&x, 0, &mut rng(1)).is_err());
    }

    #[test]
    fn half_normal_error_mean() {
        let q = Objective::identity_quadratic(vec![0.0]).unwrap();
        let model = MeasurementModel::exact(q).with_error(ErrorKind::HalfNormal, 1.5);
        let m: Batch = 25;
        let n = 1_000_000;
        let mut r = rng(3);
        let (mut s, mut ss) = (0.0, 0.0);
        for _ in 0..n {
            let e = model.measure(&[0.0], m, &mut r).unwrap();
            s += e;
            ss += e * e;
        }
        let mean = s / n as f64;
        let se = ((ss / n as f64 - mean * mean) / n as f64).sqrt();
        let expected = 1.5 * (2.0 / std::f64::consts::PI).sqrt() / 5.0;
        assert!(
            (mean - expected).abs() <= 4.0 * se,
            "{mean} vs {expected} (se {se})"
        );
        assert!((model.expected_error(&[0.0], m) - expected).abs() < 1e-15);
    }

    #[test]
    fn cvar_objective_measurement_is_consistent() {
        let base = Objective::identity_quadratic(vec![0.0, 0.0]).unwrap();
        let level = RiskLevel::new(0.9).unwrap();
        let obj = CvarObjective::new(base, 1.0, level).unwrap();
        let x = [0.5, -1.0];
        let mut r = rng(4);
        let reps = 200;
        let mean: f64 = (0..reps)
            .map(|_| obj.measure(&x, 10_000, &mut r).unwrap())
            .sum::<f64>()
            / reps as f64;
        let truth = 0.625 + gaussian_cvar_reference(0.0, 1.0, level).unwrap();
        assert!((obj.value(&x).unwrap() - truth).abs() < 1e-12);
        assert!((mean - truth).abs() < 0.05, "{mean} vs {truth}");
    }

    #[test]
    fn shared_draw_gives_common_random_numbers() {
        let q = Objective::identity_quadratic(vec![0.0, 0.0]).unwrap();
        let model = MeasurementModel::exact(q)
            .with_noise(1.0)
            .with_error(ErrorKind::HalfNormal, 1.0);
        let draw = model.draw(16, &mut rng(5)).unwrap();
        let a = model.evaluate(&[1.0, 0.0], 16, &draw).unwrap();
        let b = model.evaluate(&[-1.0, 0.0], 16, &draw).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn validation() {
        let q = Objective::identity_quadratic(vec![0.0]).unwrap();
        assert!(MeasurementModel::exact(q.clone())
            .with_noise(-1.0)
            .validate()
            .is_err());
        assert!(MeasurementModel::exact(q.clone())
            .with_error(ErrorKind::CvarEstimator, 0.0)
            .validate()
            .is_err());
        assert!(MeasurementModel::exact(q)
            .with_error_tilt(f64::NAN)
            .validate()
            .is_err());
    }
}
