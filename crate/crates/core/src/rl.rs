//! Stochastic shortest path MDP, softmax policies and risk-sensitive policy search.
//!
//! State 0 is absorbing and cost-free. An episode from `start` accumulates the
//! discounted cost `sum_t gamma^t k(s_t, a_t)` until it reaches state 0 or the
//! horizon cap. Realized costs are `k(s, a) (1 + j U)` with `U ~ Unif(-1, 1)`
//! and jitter `j` in `[0, 1]`; the jitter leaves expected costs unchanged and
//! keeps the return distribution free of atoms.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use serde::Serialize;

use crate::algorithms::{rsg_bgo, IterationSchedule, RunOptions, RunTrace};
use crate::error::{Error, Result};
use crate::oracle::{
    combine, draw_perturbation, GradientEstimate, GradientOracle, PerturbationKind,
};
use crate::point::{dot, Point};
use crate::problems::Batch;
use crate::risk::{plugin_risk, Edf, RiskFunctional};
use crate::rng::Stream;

#[derive(Debug, Clone, PartialEq)]
pub struct ChainSsp {
    n_states: usize,
    n_actions: usize,
    /// `P(s' | s, a)` at `[(s * A + a) * S + s']`.
    transitions: Vec<f64>,
    /// `k(s, a)` at `[s * A + a]`.
    costs: Vec<f64>,
    discount: f64,
    horizon_cap: usize,
    cost_noise: f64,
}

impl ChainSsp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transitions: Vec<f64>,
        costs: Vec<f64>,
        discount: f64,
        horizon_cap: usize,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::MalformedEnvironment(msg));
        if n_states < 2 || n_actions < 2 {
            return bad("need at least 2 states and 2 actions".into());
        }
        if transitions.len() != n_states * n_actions * n_states {
            return bad(format!(
                "transition table has {} entries",
                transitions.len()
            ));
        }
        if costs.len() != n_states * n_actions {
            return bad(format!("cost table has {} entries", costs.len()));
        }
        if !(discount > 0.0 && discount < 1.0) {
            return bad(format!("discount {discount} outside (0, 1)"));
        }
        if horizon_cap == 0 {
            return bad("horizon cap must be positive".into());
        }
        for (i, row) in transitions.chunks(n_states).enumerate() {
            let (s, a) = (i / n_actions, i % n_actions);
            if row.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
                return bad(format!(
                    "negative or non-finite probability at state {s}, action {a}"
                ));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return bad(format!("row for state {s}, action {a} sums to {total}"));
            }
            if s == 0 && row[0] != 1.0 {
                return bad("state 0 must be absorbing".into());
            }
            if row[0] <= 0.0 {
                return bad(format!(
                    "state 0 unreachable from state {s} under action {a}"
                ));
            }
        }
        if costs.iter().any(|c| !(*c >= 0.0 && c.is_finite())) {
            return bad("costs must be nonnegative and finite".into());
        }
        if costs[..n_actions].iter().any(|c| *c != 0.0) {
            return bad("state 0 must be cost-free".into());
        }
        Ok(ChainSsp {
            n_states,
            n_actions,
            transitions,
            costs,
            discount,
            horizon_cap,
            cost_noise: 0.0,
        })
    }

    pub fn with_cost_noise(mut self, jitter: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&jitter) {
            return Err(Error::MalformedEnvironment(format!(
                "cost noise {jitter} outside [0, 1]"
            )));
        }
        self.cost_noise = jitter;
        Ok(self)
    }

    pub fn with_horizon_cap(mut self, cap: usize) -> Result<Self> {
        if cap == 0 {
            return Err(Error::MalformedEnvironment(
                "horizon cap must be positive".into(),
            ));
        }
        self.horizon_cap = cap;
        Ok(self)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn horizon_cap(&self) -> usize {
        self.horizon_cap
    }

    pub fn cost_noise(&self) -> f64 {
        self.cost_noise
    }

    pub fn cost(&self, s: usize, a: usize) -> f64 {
        self.costs[s * self.n_actions + a]
    }

    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.transitions[start..start + self.n_states]
    }

    /// `min_{s, a} P(0 | s, a)`.
    pub fn p_min(&self) -> f64 {
        self.transitions
            .chunks(self.n_states)
            .map(|row| row[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest realized per-step cost.
    pub fn max_cost(&self) -> f64 {
        self.costs.iter().cloned().fold(0.0, f64::max) * (1.0 + self.cost_noise)
    }

    /// Upper bound on any episode's discounted cost.
    pub fn return_bound(&self) -> f64 {
        self.max_cost() / (1.0 - self.discount)
    }

    fn step(&self, s: usize, a: usize, rng: &mut dyn RngCore) -> usize {
        let row = self.transition_row(s, a);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (next, p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return next;
            }
        }
        // rounding in the row sum; fall back to the last reachable state
        row.iter().rposition(|p| *p > 0.0).unwrap_or(0)
    }
}

/// Parameters of the default advance/stop chain.
///
/// From each state `s >= 1`, `stop` ends the episode at cost `stop_cost`.
/// `advance` costs `advance_cost` and moves to 0 with probability `p_min`,
/// slips back to the far end `S - 1` with probability `slip`, and otherwise
/// moves to `s - 1`. Advancing is cheaper on average but has a heavy tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainParams {
    pub states: usize,
    pub stop_cost: f64,
    pub advance_cost: f64,
    pub slip: f64,
    pub p_min: f64,
    pub discount: f64,
    pub cost_noise: f64,
    /// Defaults to `ceil(50 / p_min)`.
    pub horizon: Option<usize>,
    pub start: usize,
}

impl Default for ChainParams {
    fn default() -> Self {
        ChainParams {
            states: 5,
            stop_cost: 5.0,
            advance_cost: 0.8,
            slip: 0.25,
            p_min: 0.05,
            discount: 0.95,
            cost_noise: 0.5,
            horizon: None,
            start: 4,
        }
    }
}

pub const ADVANCE: usize = 0;
pub const STOP: usize = 1;

impl ChainParams {
    pub fn build(&self) -> Result<ChainSsp> {
        let s_n = self.states;
        if s_n < 2 {
            return Err(Error::MalformedEnvironment("need at least 2 states".into()));
        }
        if !(self.p_min > 0.0 && self.slip >= 0.0 && self.p_min + self.slip <= 1.0) {
            return Err(Error::MalformedEnvironment(format!(
                "p_min {} and slip {} do not form a distribution",
                self.p_min, self.slip
            )));
        }
        if self.start >= s_n {
            return Err(Error::MalformedEnvironment(format!(
                "start state {} out of range",
                self.start
            )));
        }
        let mut transitions = vec![0.0; s_n * 2 * s_n];
        let mut costs = vec![0.0; s_n * 2];
        for s in 0..s_n {
            let row = |a: usize| (s * 2 + a) * s_n;
            if s == 0 {
                transitions[row(ADVANCE)] = 1.0;
                transitions[row(STOP)] = 1.0;
                continue;
            }
            transitions[row(STOP)] = 1.0;
            let adv = row(ADVANCE);
            transitions[adv] += self.p_min;
            transitions[adv + s_n - 1] += self.slip;
            transitions[adv + s - 1] += 1.0 - self.p_min - self.slip;
            costs[s * 2 + ADVANCE] = self.advance_cost;
            costs[s * 2 + STOP] = self.stop_cost;
        }
        let horizon = self.horizon.unwrap_or((50.0 / self.p_min).ceil() as usize);
        ChainSsp::new(s_n, 2, transitions, costs, self.discount, horizon)?
            .with_cost_noise(self.cost_noise)
    }
}

/// `pi_x(a | s) = exp(x . phi(s, a)) / sum_b exp(x . phi(s, b))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxPolicy {
    n_actions: usize,
    /// `phi(s, a)` at `[s * A + a]`.
    features: Vec<Vec<f64>>,
    param: Point,
}

impl SoftmaxPolicy {
    pub fn new(n_actions: usize, features: Vec<Vec<f64>>, param: Point) -> Result<Self> {
        if n_actions == 0 || features.is_empty() || !features.len().is_multiple_of(n_actions) {
            return Err(Error::invalid(
                "features",
                "need one feature vector per state-action pair",
            ));
        }
        for f in &features {
            if f.len() != param.dim() {
                return Err(Error::DimensionMismatch {
                    expected: param.dim(),
                    got: f.len(),
                });
            }
        }
        Ok(SoftmaxPolicy {
            n_actions,
            features,
            param,
        })
    }

    /// One indicator feature per action, shared across states (`d = A`).
    pub fn action_indicator(env: &ChainSsp, param: Point) -> Result<Self> {
        let a_n = env.n_actions();
        let features = (0..env.n_states() * a_n)
            .map(|i| {
                let mut f = vec![0.0; a_n];
                f[i % a_n] = 1.0;
                f
            })
            .collect();
        Self::new(a_n, features, param)
    }

    pub fn dim(&self) -> usize {
        self.param.dim()
    }

    pub fn param(&self) -> &Point {
        &self.param
    }

    pub fn with_param(&self, param: Point) -> Result<Self> {
        Self::new(self.n_actions, self.features.clone(), param)
    }

    pub fn n_states(&self) -> usize {
        self.features.len() / self.n_actions
    }

    pub fn probabilities(&self, s: usize) -> Vec<f64> {
        let logits: Vec<f64> = (0..self.n_actions)
            .map(|a| {
                dot(
                    self.param.as_slice(),
                    &self.features[s * self.n_actions + a],
                )
            })
            .collect();
        let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|v| v / z).collect()
    }

    fn sample_action(&self, s: usize, rng: &mut dyn RngCore) -> usize {
        let probs = self.probabilities(s);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (a, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return a;
            }
        }
        self.n_actions - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpisodeResult {
    pub total_cost: f64,
    pub length: usize,
    pub truncated: bool,
}

fn check_pair(env: &ChainSsp, policy: &SoftmaxPolicy, start: usize) -> Result<()> {
    if policy.n_actions != env.n_actions() || policy.n_states() != env.n_states() {
        return Err(Error::invalid(
            "policy",
            "feature table does not match the environment",
        ));
    }
    if start >= env.n_states() {
        return Err(Error::OutOfRange {
            k: start,
            n: env.n_states() - 1,
        });
    }
    Ok(())
}

pub fn rollout(
    env: &ChainSsp,
    policy: &SoftmaxPolicy,
    start: usize,
    rng: &mut dyn RngCore,
) -> Result<EpisodeResult> {
    check_pair(env, policy, start)?;
    Ok(rollout_unchecked(env, policy, start, rng))
}

fn rollout_unchecked(
    env: &ChainSsp,
    policy: &SoftmaxPolicy,
    start: usize,
    rng: &mut dyn RngCore,
) -> EpisodeResult {
    let mut s = start;
    let mut t = 0;
    let mut total = 0.0;
    let mut weight = 1.0;
    while s != 0 && t < env.horizon_cap {
        let a = policy.sample_action(s, rng);
        let mut cost = env.cost(s, a);
        if env.cost_noise > 0.0 {
            cost *= 1.0 + env.cost_noise * (2.0 * rng.random::<f64>() - 1.0);
        }
        total += weight * cost;
        weight *= env.discount;
        s = env.step(s, a, rng);
        t += 1;
    }
    EpisodeResult {
        total_cost: total,
        length: t,
        truncated: s != 0,
    }
}

/// Discounted costs of `m` independent episodes.
pub fn sample_returns(
    env: &ChainSsp,
    policy: &SoftmaxPolicy,
    start: usize,
    m: usize,
    rng: &mut dyn RngCore,
) -> Result<Vec<f64>> {
    check_pair(env, policy, start)?;
    if m == 0 {
        return Err(Error::invalid("m", "need at least one episode"));
    }
    Ok((0..m)
        .map(|_| rollout_unchecked(env, policy, start, rng).total_cost)
        .collect())
}

/// Plug-in risk of the return distribution from `m` episodes.
pub fn estimate_policy_risk(
    env: &ChainSsp,
    policy: &SoftmaxPolicy,
    start: usize,
    m: usize,
    functional: RiskFunctional,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    let edf = Edf::from_vec(sample_returns(env, policy, start, m, rng)?)?;
    Ok(plugin_risk(&edf, functional))
}

/// Expected discounted cost from every state under a stationary randomized
/// policy given as per-state action probabilities, by solving
/// `(I - gamma P_pi) V = c_pi` on the transient states. Ignores truncation.
pub fn policy_value_table(env: &ChainSsp, probs: &[Vec<f64>]) -> Result<Vec<f64>> {
    let s_n = env.n_states();
    if probs.len() != s_n || probs.iter().any(|p| p.len() != env.n_actions()) {
        return Err(Error::invalid(
            "policy",
            "probability table does not match the environment",
        ));
    }
    let n = s_n - 1;
    let mut a = DMatrix::<f64>::identity(n, n);
    let mut b = DVector::<f64>::zeros(n);
    for s in 1..s_n {
        for (act, p) in probs[s].iter().enumerate() {
            b[s - 1] += p * env.cost(s, act);
            for (next, q) in env.transition_row(s, act).iter().enumerate().skip(1) {
                a[(s - 1, next - 1)] -= env.discount * p * q;
            }
        }
    }
    let v = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::MalformedEnvironment("singular policy evaluation system".into()))?;
    let mut out = vec![0.0];
    out.extend(v.iter());
    Ok(out)
}

pub fn policy_value(env: &ChainSsp, policy: &SoftmaxPolicy) -> Result<Vec<f64>> {
    check_pair(env, policy, 0)?;
    let probs: Vec<Vec<f64>> = (0..env.n_states())
        .map(|s| policy.probabilities(s))
        .collect();
    policy_value_table(env, &probs)
}

/// Value of always playing `action`.
pub fn deterministic_policy_value(env: &ChainSsp, action: usize) -> Result<Vec<f64>> {
    if action >= env.n_actions() {
        return Err(Error::OutOfRange {
            k: action,
            n: env.n_actions() - 1,
        });
    }
    let probs: Vec<Vec<f64>> = (0..env.n_states())
        .map(|_| {
            let mut p = vec![0.0; env.n_actions()];
            p[action] = 1.0;
            p
        })
        .collect();
    policy_value_table(env, &probs)
}

/// Two-point estimate of the gradient of the policy risk along `direction`,
/// with the `+` and `-` episode sets driven by separate streams.
#[allow(clippy::too_many_arguments)]
pub fn policy_risk_two_point(
    env: &ChainSsp,
    policy: &SoftmaxPolicy,
    start: usize,
    x: &Point,
    direction: &[f64],
    eta: f64,
    m: usize,
    functional: RiskFunctional,
    rng_plus: &mut dyn RngCore,
    rng_minus: &mut dyn RngCore,
) -> Result<Vec<f64>> {
    let plus = policy.with_param(x.offset(eta, direction))?;
    let minus = policy.with_param(x.offset(-eta, direction))?;
    let rho_plus = estimate_policy_risk(env, &plus, start, m, functional, rng_plus)?;
    let rho_minus = estimate_policy_risk(env, &minus, start, m, functional, rng_minus)?;
    Ok(combine(
        PerturbationKind::Gaussian,
        direction,
        rho_plus,
        rho_minus,
        eta,
    ))
}

/// Gradient oracle over the plug-in risk of the policy's return. Accounts
/// episodes: `2m` per query.
#[derive(Debug, Clone)]
pub struct PolicyRiskOracle {
    pub env: ChainSsp,
    pub policy: SoftmaxPolicy,
    pub start: usize,
    pub functional: RiskFunctional,
    /// Drive the `+` and `-` episode sets with the same stream.
    pub common_random_numbers: bool,
}

impl PolicyRiskOracle {
    pub fn new(
        env: ChainSsp,
        policy: SoftmaxPolicy,
        start: usize,
        functional: RiskFunctional,
    ) -> Result<Self> {
        check_pair(&env, &policy, start)?;
        Ok(PolicyRiskOracle {
            env,
            policy,
            start,
            functional,
            common_random_numbers: false,
        })
    }
}

impl GradientOracle for PolicyRiskOracle {
    fn dim(&self) -> usize {
        self.policy.dim()
    }

    fn query(
        &self,
        x: &Point,
        eta: f64,
        m: Batch,
        rng: &mut dyn RngCore,
    ) -> Result<GradientEstimate> {
        x.check_dim(self.dim())?;
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::invalid("eta", "must be positive"));
        }
        let episodes = usize::try_from(m)
            .ok()
            .filter(|m| *m >= 1)
            .ok_or_else(|| Error::invalid("m", "episode count must be in [1, usize::MAX]"))?;
        let direction = draw_perturbation(PerturbationKind::Gaussian, self.dim(), rng);
        let seed_plus = rng.next_u64();
        let seed_minus = if self.common_random_numbers {
            seed_plus
        } else {
            rng.next_u64()
        };
        let grad = policy_risk_two_point(
            &self.env,
            &self.policy,
            self.start,
            x,
            &direction,
            eta,
            episodes,
            self.functional,
            &mut Stream::seed_from_u64(seed_plus),
            &mut Stream::seed_from_u64(seed_minus),
        )?;
        Ok(GradientEstimate {
            grad,
            samples_used: 2 * m,
        })
    }
}

/// Risk-sensitive policy gradient: the randomized-output driver over the
/// episode-based risk oracle. `total_samples` in the trace counts episodes.
#[allow(clippy::too_many_arguments)]
pub fn risk_pg(
    env: &ChainSsp,
    start: usize,
    policy: &SoftmaxPolicy,
    x1: Point,
    schedule: &IterationSchedule,
    functional: RiskFunctional,
    opts: &RunOptions,
    rng: &mut dyn RngCore,
) -> Result<RunTrace> {
    let oracle = PolicyRiskOracle::new(env.clone(), policy.clone(), start, functional)?;
    rsg_bgo(&oracle, x1, schedule, opts, rng)
}
