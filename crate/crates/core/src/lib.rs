//! Zeroth-order stochastic optimization with biased gradient oracles.
//!
//! The crate provides two-point gradient oracles over biased function
//! measurements, the randomized-output (RSG) and last-iterate (SGD) drivers with
//! their parameter schedules, plug-in CVaR estimation, a risk-sensitive policy
//! search on a stochastic shortest path MDP, and a replicated experiment
//! harness that fits empirical convergence rates.

pub mod algorithms;
pub mod error;
pub mod experiment;
pub mod oracle;
pub mod point;
pub mod problems;
pub mod risk;
pub mod rl;
pub mod rng;

pub use error::{Error, Result};
pub use oracle::{
    draw_perturbation, probe_oracle, two_point_estimate, BiasedOracle, GradientEstimate,
    GradientOracle, OracleDiagnostics, OracleKind, PerturbationKind,
};
pub use point::Point;
pub use problems::{Batch, CvarObjective, ErrorKind, MeasurementModel, Objective};
pub use risk::{cvar_estimate, var_estimate, Edf, RiskFunctional, RiskLevel};
