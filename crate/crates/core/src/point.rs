use std::fmt;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A decision variable in `R^d`.
///
/// Construction through [`Point::new`] checks `d >= 1` and finiteness; the
/// optimizers re-check finiteness after every update and report divergence
/// instead of carrying NaNs forward.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("point", "dimension must be at least 1"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("point coordinates"));
        }
        Ok(Point(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::filled(dim, 0.0)
    }

    pub fn filled(dim: usize, value: f64) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        Point(vec![value; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    /// `self + scale * dir`, without re-validating finiteness.
    pub fn offset(&self, scale: f64, dir: &[f64]) -> Point {
        debug_assert_eq!(self.0.len(), dir.len());
        Point(self.0.iter().zip(dir).map(|(x, d)| x + scale * d).collect())
    }

    /// In-place `self -= step * g`.
    pub fn descend(&mut self, step: f64, g: &[f64]) {
        debug_assert_eq!(self.0.len(), g.len());
        for (x, gi) in self.0.iter_mut().zip(g) {
            *x -= step * gi;
        }
    }

    pub(crate) fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: self.dim(),
            });
        }
        Ok(())
    }
}

impl Index<usize> for Point {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.0).finish()
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Point::new(v)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}
