use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub stderr: f64,
}

/// Ordinary least squares of `ln(values)` on `ln(ns)`.
pub fn fit_loglog_slope(ns: &[usize], values: &[f64]) -> Result<SlopeFit> {
    if ns.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: ns.len(),
            got: values.len(),
        });
    }
    if ns.len() < 3 {
        return Err(Error::invalid(
            "values",
            "need at least 3 points for a slope fit",
        ));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::invalid(
            "values",
            format!("nonpositive or non-finite value {v}"),
        ));
    }
    if ns.contains(&0) {
        return Err(Error::invalid("ns", "budgets must be positive"));
    }
    let x: Vec<f64> = ns.iter().map(|n| (*n as f64).ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("ns", "need at least two distinct budgets"));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let stderr = (rss / (k - 2.0) / sxx).sqrt();
    Ok(SlopeFit { slope, stderr })
}
