//! Plug-in risk estimation over empirical distribution functions.
//!
//! VaR is the order statistic `X_[floor(m * alpha)]` (1-based, clamped to
//! `[1, m]`), and CVaR is the tail sum normalized by `m * (1 - alpha)`:
//!
//! ```text
//! C_hat = (1 / (m (1 - alpha))) * sum_i X_i * 1{X_i >= V_hat}
//! ```
//!
//! Samples tied with `V_hat` are all counted. Because the normalization is
//! `m (1 - alpha)` rather than the realized tail count, the estimator is not
//! the constant `c` on an atom at `c`; it returns `c / (1 - alpha)` there.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Sorted samples of an empirical distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Edf {
    sorted: Vec<f64>,
}

impl Edf {
    pub fn new(samples: &[f64]) -> Result<Self> {
        Self::from_vec(samples.to_vec())
    }

    pub fn from_vec(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySamples);
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("edf samples"));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Edf { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted_samples(&self) -> &[f64] {
        &self.sorted
    }

    /// 1-based order statistic `X_[i]`.
    pub fn order_statistic(&self, i: usize) -> f64 {
        self.sorted[i - 1]
    }

    pub fn mean(&self) -> f64 {
        self.sorted.iter().sum::<f64>() / self.len() as f64
    }

    /// Standard deviation of the empirical distribution (divisor `m`).
    pub fn std_dev(&self) -> f64 {
        let mean = self.mean();
        let ss: f64 = self.sorted.iter().map(|x| (x - mean).powi(2)).sum();
        (ss / self.len() as f64).sqrt()
    }

    /// Number of samples counted in the CVaR tail at `level`.
    pub fn tail_count(&self, level: RiskLevel) -> usize {
        let v = var_estimate(self, level);
        let first = self.sorted.partition_point(|x| *x < v);
        self.len() - first
    }
}

/// A risk level `alpha` in the open interval `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct RiskLevel(f64);

impl RiskLevel {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(RiskLevel(alpha))
        } else {
            Err(Error::invalid("alpha", format!("{alpha} is not in (0, 1)")))
        }
    }

    pub fn alpha(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for RiskLevel {
    type Error = Error;

    fn try_from(a: f64) -> Result<Self> {
        RiskLevel::new(a)
    }
}

impl From<RiskLevel> for f64 {
    fn from(l: RiskLevel) -> f64 {
        l.0
    }
}

fn var_index(m: usize, alpha: f64) -> usize {
    ((m as f64 * alpha).floor() as usize).clamp(1, m)
}

pub fn var_estimate(edf: &Edf, level: RiskLevel) -> f64 {
    edf.order_statistic(var_index(edf.len(), level.alpha()))
}

pub fn cvar_estimate(edf: &Edf, level: RiskLevel) -> f64 {
    let v = var_estimate(edf, level);
    let first = edf.sorted.partition_point(|x| *x < v);
    let tail: f64 = edf.sorted[first..].iter().sum();
    let m = edf.len() as f64;
    // m - m alpha is exact whenever m alpha is, unlike m (1 - alpha)
    tail / (m - m * level.alpha())
}

/// The closed set of risk functionals that can be applied to an [`Edf`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskFunctional {
    Cvar(RiskLevel),
    Mean,
    MeanPlusKStd(f64),
}

impl RiskFunctional {
    pub fn apply(&self, edf: &Edf) -> f64 {
        plugin_risk(edf, *self)
    }
}

pub fn plugin_risk(edf: &Edf, functional: RiskFunctional) -> f64 {
    match functional {
        RiskFunctional::Cvar(level) => cvar_estimate(edf, level),
        RiskFunctional::Mean => edf.mean(),
        RiskFunctional::MeanPlusKStd(k) => edf.mean() + k * edf.std_dev(),
    }
}

impl FromStr for RiskFunctional {
    type Err = Error;

    /// Parses `mean`, `cvar:<alpha>` or `mean_plus_k_std:<k>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (tag, arg) = match s.split_once(':') {
            Some((t, a)) => (t.trim(), Some(a.trim())),
            None => (s, None),
        };
        let number = |a: Option<&str>| -> Result<f64> {
            a.ok_or_else(|| Error::invalid("risk", format!("`{tag}` needs an argument")))?
                .parse::<f64>()
                .map_err(|e| Error::invalid("risk", e.to_string()))
        };
        match tag {
            "mean" if arg.is_none() => Ok(RiskFunctional::Mean),
            "cvar" => Ok(RiskFunctional::Cvar(RiskLevel::new(number(arg)?)?)),
            "mean_plus_k_std" => Ok(RiskFunctional::MeanPlusKStd(number(arg)?)),
            _ => Err(Error::invalid("risk", format!("unknown functional `{s}`"))),
        }
    }
}

impl fmt::Display for RiskFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RiskFunctional::Cvar(l) => write!(f, "cvar:{}", l.alpha()),
            RiskFunctional::Mean => write!(f, "mean"),
            RiskFunctional::MeanPlusKStd(k) => write!(f, "mean_plus_k_std:{k}"),
        }
    }
}

/// CVaR of `N(mu, sigma^2)`: `mu + sigma * phi(Phi^{-1}(alpha)) / (1 - alpha)`.
pub fn gaussian_cvar_reference(mu: f64, sigma: f64, level: RiskLevel) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("sigma", "must be positive"));
    }
    let std = Normal::standard();
    let z = std.inverse_cdf(level.alpha());
    Ok(mu + sigma * std.pdf(z) / (1.0 - level.alpha()))
}
