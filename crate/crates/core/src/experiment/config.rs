//! Flat `key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Lists (`n_grid`, `x0`, `probe_eta`, `probe_m`) are comma separated.

use std::collections::HashMap;
use std::fmt::{self, Display, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::algorithms::{Algorithm, ScheduleParams};
use crate::error::{Error, Result};
use crate::oracle::{BiasedOracle, OracleKind, PerturbationKind};
use crate::point::Point;
use crate::problems::{Batch, ErrorKind, MeasurementModel, Objective};
use crate::risk::{RiskFunctional, RiskLevel};
use crate::rl::ChainParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `||grad f(x)||^2` at the returned point.
    GradNormSq,
    /// `f(x) - f(x*)` at the returned point.
    OptimalityGap,
    /// Plug-in risk of the policy return at the returned point.
    PolicyRisk,
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "grad_norm_sq" => Ok(Metric::GradNormSq),
            "optimality_gap" => Ok(Metric::OptimalityGap),
            "policy_risk" => Ok(Metric::PolicyRisk),
            other => Err(Error::invalid(
                "metric",
                format!("unknown metric `{other}`"),
            )),
        }
    }
}

impl Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::GradNormSq => "grad_norm_sq",
            Metric::OptimalityGap => "optimality_gap",
            Metric::PolicyRisk => "policy_risk",
        })
    }
}

/// Name of the objective used by risk-PG configs.
pub const SSP_OBJECTIVE: &str = "ssp_chain";

/// Objective, measurement model and starting point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSpec {
    pub objective: String,
    pub dim: usize,
    pub noise_std: f64,
    pub grad_noise_std: f64,
    pub error_kind: ErrorKind,
    pub error_coeff: f64,
    pub error_tilt: f64,
    pub cvar_alpha: f64,
    pub perturbation: PerturbationKind,
    /// Overrides the oracle's default (off for O1, on for O2).
    pub common_random_numbers: Option<bool>,
    /// One value (broadcast) or `dim` values; defaults to the origin.
    pub x0: Option<Vec<f64>>,
}

impl ModelSpec {
    fn with_defaults(objective: String, dim: usize) -> Self {
        ModelSpec {
            objective,
            dim,
            noise_std: 0.0,
            grad_noise_std: 0.0,
            error_kind: ErrorKind::None,
            error_coeff: 0.0,
            error_tilt: 0.0,
            cvar_alpha: 0.9,
            perturbation: PerturbationKind::Gaussian,
            common_random_numbers: None,
            x0: None,
        }
    }

    pub fn objective(&self) -> Result<Objective> {
        Objective::by_name(&self.objective, self.dim)
    }

    pub fn model(&self) -> Result<MeasurementModel> {
        let model = MeasurementModel::exact(self.objective()?)
            .with_noise(self.noise_std)
            .with_grad_noise(self.grad_noise_std)
            .with_error(self.error_kind, self.error_coeff)
            .with_error_tilt(self.error_tilt)
            .with_cvar_level(RiskLevel::new(self.cvar_alpha)?);
        model.validate()?;
        Ok(model)
    }

    pub fn oracle(&self, kind: OracleKind) -> Result<BiasedOracle> {
        let mut oracle =
            BiasedOracle::new(self.model()?, kind).with_perturbation(self.perturbation);
        if let Some(crn) = self.common_random_numbers {
            oracle = oracle.with_common_random_numbers(crn);
        }
        Ok(oracle)
    }

    pub fn start(&self) -> Result<Point> {
        match &self.x0 {
            None => Ok(Point::zeros(self.dim)),
            Some(v) if v.len() == 1 => Point::new(vec![v[0]; self.dim]),
            Some(v) if v.len() == self.dim => Point::new(v.clone()),
            Some(v) => Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub algo: Algorithm,
    pub oracle: OracleKind,
    pub model: ModelSpec,
    pub gamma0: f64,
    pub eta0: f64,
    pub m0: f64,
    pub beta: Option<f64>,
    /// Defaults to the objective's smoothness constant.
    pub lipschitz: Option<f64>,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
    pub metric: Metric,
    pub out: PathBuf,
    /// Risk-PG only.
    pub risk: RiskFunctional,
    pub ssp: ChainParams,
    /// Episodes used to evaluate the policy risk metric.
    pub eval_episodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeConfig {
    pub oracle: OracleKind,
    pub model: ModelSpec,
    pub etas: Vec<f64>,
    pub batches: Vec<Batch>,
    pub trials: usize,
    pub seed: u64,
    pub out: PathBuf,
}

const MODEL_KEYS: &[&str] = &[
    "objective",
    "dim",
    "noise_std",
    "grad_noise_std",
    "error_kind",
    "error_coeff",
    "error_tilt",
    "cvar_alpha",
    "perturbation",
    "common_random_numbers",
    "x0",
];

const RATE_KEYS: &[&str] = &[
    "algo",
    "oracle",
    "gamma0",
    "eta0",
    "m0",
    "beta",
    "lipschitz",
    "n_grid",
    "replications",
    "seed",
    "metric",
    "out",
];

const RISKPG_KEYS: &[&str] = &[
    "risk",
    "eval_episodes",
    "ssp_states",
    "ssp_stop_cost",
    "ssp_advance_cost",
    "ssp_slip",
    "ssp_p_min",
    "ssp_discount",
    "ssp_cost_noise",
    "ssp_horizon",
    "ssp_start",
];

const PROBE_KEYS: &[&str] = &[
    "oracle",
    "probe_eta",
    "probe_m",
    "probe_trials",
    "seed",
    "out",
];

struct Entry {
    line: usize,
    value: String,
    used: bool,
}

/// Parsed assignments with their line numbers, for error reporting.
struct KeyValues {
    entries: HashMap<String, Entry>,
}

impl KeyValues {
    fn parse(text: &str, allowed: &[&[&str]]) -> Result<Self> {
        let mut entries = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                field: content.to_string(),
                message: "expected `key = value`".into(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !allowed.iter().any(|set| set.contains(&key)) {
                return Err(Error::Config {
                    line,
                    field: key.into(),
                    message: "unknown key".into(),
                });
            }
            if value.is_empty() {
                return Err(Error::Config {
                    line,
                    field: key.into(),
                    message: "empty value".into(),
                });
            }
            if let Some(prev) = entries.get(key) {
                let prev: &Entry = prev;
                return Err(Error::Config {
                    line,
                    field: key.into(),
                    message: format!("duplicate key, first set on line {}", prev.line),
                });
            }
            entries.insert(
                key.to_string(),
                Entry {
                    line,
                    value: value.to_string(),
                    used: false,
                },
            );
        }
        Ok(KeyValues { entries })
    }

    fn field_error(&self, key: &str, message: impl Into<String>) -> Error {
        Error::Config {
            line: self.entries.get(key).map_or(0, |e| e.line),
            field: key.to_string(),
            message: message.into(),
        }
    }

    fn raw(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.get_mut(key).map(|e| {
            e.used = true;
            (e.line, e.value.clone())
        })
    }

    fn optional<T>(&mut self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v.parse::<T>().map(Some).map_err(|e| Error::Config {
                line,
                field: key.to_string(),
                message: e.to_string(),
            }),
        }
    }

    fn required<T>(&mut self, key: &str) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.optional(key)?
            .ok_or_else(|| Error::MissingField(key.to_string()))
    }

    fn list<T>(&mut self, key: &str) -> Result<Option<Vec<T>>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(|item| {
                    item.trim().parse::<T>().map_err(|e| Error::Config {
                        line,
                        field: key.to_string(),
                        message: format!("`{}`: {e}", item.trim()),
                    })
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }

    fn has_any<'k>(&self, keys: &[&'k str]) -> Option<&'k str> {
        keys.iter()
            .find(|k| self.entries.contains_key(**k))
            .copied()
    }

    fn check_all_used(&self) -> Result<()> {
        match self
            .entries
            .iter()
            .filter(|(_, e)| !e.used)
            .min_by_key(|(_, e)| e.line)
        {
            Some((k, e)) => Err(Error::Config {
                line: e.line,
                field: k.clone(),
                message: "key not valid here".into(),
            }),
            None => Ok(()),
        }
    }
}

fn check(kv: &KeyValues, key: &str, ok: bool, message: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(kv.field_error(key, message))
    }
}

fn parse_model(kv: &mut KeyValues) -> Result<ModelSpec> {
    let objective: String = kv.required("objective")?;
    let dim: usize = kv.required("dim")?;
    check(kv, "dim", dim >= 1, "must be at least 1")?;
    let mut spec = ModelSpec::with_defaults(objective, dim);
    if let Some(v) = kv.optional("noise_std")? {
        spec.noise_std = v;
    }
    if let Some(v) = kv.optional("grad_noise_std")? {
        spec.grad_noise_std = v;
    }
    if let Some(v) = kv.optional("error_kind")? {
        spec.error_kind = v;
    }
    if let Some(v) = kv.optional("error_coeff")? {
        spec.error_coeff = v;
    }
    if let Some(v) = kv.optional("error_tilt")? {
        spec.error_tilt = v;
    }
    if let Some(v) = kv.optional("cvar_alpha")? {
        spec.cvar_alpha = v;
    }
    if let Some(v) = kv.optional("perturbation")? {
        spec.perturbation = v;
    }
    spec.common_random_numbers = kv.optional("common_random_numbers")?;
    spec.x0 = kv.list("x0")?;
    if let Some(x0) = &spec.x0 {
        check(
            kv,
            "x0",
            x0.len() == 1 || x0.len() == dim,
            "needs 1 or `dim` values",
        )?;
        check(
            kv,
            "x0",
            x0.iter().all(|v| v.is_finite()),
            "values must be finite",
        )?;
    }
    Ok(spec)
}

fn validate_model(kv: &KeyValues, spec: &ModelSpec) -> Result<()> {
    if spec.objective != SSP_OBJECTIVE {
        spec.objective()
            .map_err(|e| kv.field_error("objective", e.to_string()))?;
        spec.model().map_err(|e| match e {
            Error::InvalidParameter { name, reason } => kv.field_error(name, reason),
            other => other,
        })?;
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = KeyValues::parse(text, &[MODEL_KEYS, RATE_KEYS, RISKPG_KEYS])?;
        let algo: Algorithm = kv.required("algo")?;
        let oracle: OracleKind = kv.required("oracle")?;
        let model = parse_model(&mut kv)?;
        let n_grid: Vec<usize> = kv
            .list("n_grid")?
            .ok_or_else(|| Error::MissingField("n_grid".into()))?;
        let replications: usize = kv.required("replications")?;
        let seed: u64 = kv.required("seed")?;
        let metric: Metric = kv.required("metric")?;
        let out: PathBuf = kv.required("out")?;
        let mut c = ExperimentConfig {
            algo,
            oracle,
            model,
            gamma0: kv.optional("gamma0")?.unwrap_or(1.0),
            eta0: kv.optional("eta0")?.unwrap_or(1.0),
            m0: kv.optional("m0")?.unwrap_or(1.0),
            beta: kv.optional("beta")?,
            lipschitz: kv.optional("lipschitz")?,
            n_grid,
            replications,
            seed,
            metric,
            out,
            risk: RiskFunctional::Cvar(RiskLevel::new(0.9)?),
            ssp: ChainParams::default(),
            eval_episodes: 10_000,
        };

        if algo == Algorithm::RiskPg {
            if let Some(v) = kv.optional("risk")? {
                c.risk = v;
            }
            if let Some(v) = kv.optional("eval_episodes")? {
                c.eval_episodes = v;
            }
            let s = &mut c.ssp;
            macro_rules! ssp {
                ($key:literal, $field:ident) => {
                    if let Some(v) = kv.optional($key)? {
                        s.$field = v;
                    }
                };
            }
            ssp!("ssp_states", states);
            ssp!("ssp_stop_cost", stop_cost);
            ssp!("ssp_advance_cost", advance_cost);
            ssp!("ssp_slip", slip);
            ssp!("ssp_p_min", p_min);
            ssp!("ssp_discount", discount);
            ssp!("ssp_cost_noise", cost_noise);
            ssp!("ssp_start", start);
            s.horizon = kv.optional("ssp_horizon")?;
        } else if let Some(k) = kv.has_any(RISKPG_KEYS) {
            return Err(kv.field_error(k, "only valid with algo = riskpg"));
        }
        kv.check_all_used()?;
        c.validate_with(&kv)?;
        Ok(c)
    }

    /// Checks cross-field consistency.
    pub fn validate(&self) -> Result<()> {
        let text = self.to_config_string();
        Self::parse(&text).map(|_| ())
    }

    fn validate_with(&self, kv: &KeyValues) -> Result<()> {
        check(
            kv,
            "n_grid",
            !self.n_grid.is_empty(),
            "needs at least one budget",
        )?;
        check(
            kv,
            "n_grid",
            self.n_grid[0] >= 1,
            "budgets must be at least 1",
        )?;
        check(
            kv,
            "n_grid",
            self.n_grid.windows(2).all(|w| w[0] < w[1]),
            "must be strictly increasing",
        )?;
        check(
            kv,
            "replications",
            self.replications >= 1,
            "must be at least 1",
        )?;
        for (key, v) in [
            ("gamma0", self.gamma0),
            ("eta0", self.eta0),
            ("m0", self.m0),
        ] {
            check(kv, key, v > 0.0 && v.is_finite(), "must be positive")?;
        }
        if let Some(b) = self.beta {
            check(kv, "beta", b > 0.0 && b < 1.0, "must lie in (0, 1)")?;
            check(
                kv,
                "beta",
                self.algo != Algorithm::Sgd,
                "only used by rsg schedules",
            )?;
            check(
                kv,
                "beta",
                self.oracle == OracleKind::O1,
                "only used with oracle o1",
            )?;
        }
        if let Some(l) = self.lipschitz {
            check(
                kv,
                "lipschitz",
                l > 0.0 && l.is_finite(),
                "must be positive",
            )?;
        }
        validate_model(kv, &self.model)?;
        match self.algo {
            Algorithm::RiskPg => {
                check(
                    kv,
                    "metric",
                    self.metric == Metric::PolicyRisk,
                    "riskpg requires metric = policy_risk",
                )?;
                check(
                    kv,
                    "objective",
                    self.model.objective == SSP_OBJECTIVE,
                    "riskpg requires objective = ssp_chain",
                )?;
                check(
                    kv,
                    "dim",
                    self.model.dim == 2,
                    "the ssp_chain policy has 2 parameters",
                )?;
                check(
                    kv,
                    "eval_episodes",
                    self.eval_episodes >= 1,
                    "must be at least 1",
                )?;
                self.ssp
                    .build()
                    .map_err(|e| kv.field_error("ssp_states", e.to_string()))?;
            }
            Algorithm::Rsg | Algorithm::Sgd => {
                check(
                    kv,
                    "metric",
                    self.metric != Metric::PolicyRisk,
                    "policy_risk requires algo = riskpg",
                )?;
                if self.algo == Algorithm::Rsg {
                    check(
                        kv,
                        "lipschitz",
                        self.lipschitz.is_some() || self.model.objective()?.smoothness().is_some(),
                        "objective has no global smoothness constant; set lipschitz",
                    )?;
                }
            }
        }
        Ok(())
    }

    pub fn schedule_params(&self) -> Result<ScheduleParams> {
        let lipschitz = match (self.lipschitz, self.algo) {
            (Some(l), _) => l,
            (None, Algorithm::RiskPg) => 1.0,
            (None, _) => self.model.objective()?.smoothness().unwrap_or(1.0),
        };
        Ok(ScheduleParams {
            gamma0: self.gamma0,
            eta0: self.eta0,
            m0: self.m0,
            lipschitz,
            beta: self.beta,
        })
    }

    /// Canonical text form; [`ExperimentConfig::parse`] inverts it.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        put("algo", self.algo.to_string());
        put("oracle", self.oracle.to_string());
        write_model(&mut put, &self.model);
        put("gamma0", self.gamma0.to_string());
        put("eta0", self.eta0.to_string());
        put("m0", self.m0.to_string());
        if let Some(b) = self.beta {
            put("beta", b.to_string());
        }
        if let Some(l) = self.lipschitz {
            put("lipschitz", l.to_string());
        }
        put("n_grid", join(&self.n_grid));
        put("replications", self.replications.to_string());
        put("seed", self.seed.to_string());
        put("metric", self.metric.to_string());
        put("out", self.out.display().to_string());
        if self.algo == Algorithm::RiskPg {
            let p = &self.ssp;
            put("risk", self.risk.to_string());
            put("eval_episodes", self.eval_episodes.to_string());
            put("ssp_states", p.states.to_string());
            put("ssp_stop_cost", p.stop_cost.to_string());
            put("ssp_advance_cost", p.advance_cost.to_string());
            put("ssp_slip", p.slip.to_string());
            put("ssp_p_min", p.p_min.to_string());
            put("ssp_discount", p.discount.to_string());
            put("ssp_cost_noise", p.cost_noise.to_string());
            if let Some(h) = p.horizon {
                put("ssp_horizon", h.to_string());
            }
            put("ssp_start", p.start.to_string());
        }
        s
    }

    /// `(key, value)` pairs of the canonical text form.
    pub fn pairs(&self) -> Vec<(String, String)> {
        pairs_of(&self.to_config_string())
    }
}

impl ProbeConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = KeyValues::parse(text, &[MODEL_KEYS, PROBE_KEYS])?;
        let oracle = kv.required("oracle")?;
        let model = parse_model(&mut kv)?;
        let etas: Vec<f64> = kv
            .list("probe_eta")?
            .ok_or_else(|| Error::MissingField("probe_eta".into()))?;
        let batches: Vec<Batch> = kv
            .list("probe_m")?
            .ok_or_else(|| Error::MissingField("probe_m".into()))?;
        let c = ProbeConfig {
            oracle,
            model,
            etas,
            batches,
            trials: kv.optional("probe_trials")?.unwrap_or(10_000),
            seed: kv.required("seed")?,
            out: kv.required("out")?,
        };
        kv.check_all_used()?;
        check(
            &kv,
            "probe_eta",
            c.etas.iter().all(|e| *e > 0.0 && e.is_finite()),
            "must be positive",
        )?;
        check(
            &kv,
            "probe_m",
            c.batches.iter().all(|m| *m >= 1),
            "must be at least 1",
        )?;
        check(&kv, "probe_trials", c.trials >= 2, "must be at least 2")?;
        check(
            &kv,
            "objective",
            c.model.objective != SSP_OBJECTIVE,
            "probe needs a synthetic objective",
        )?;
        validate_model(&kv, &c.model)?;
        Ok(c)
    }

    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        put("oracle", self.oracle.to_string());
        write_model(&mut put, &self.model);
        put("probe_eta", join(&self.etas));
        put("probe_m", join(&self.batches));
        put("probe_trials", self.trials.to_string());
        put("seed", self.seed.to_string());
        put("out", self.out.display().to_string());
        s
    }

    pub fn pairs(&self) -> Vec<(String, String)> {
        pairs_of(&self.to_config_string())
    }
}

fn write_model(put: &mut impl FnMut(&str, String), m: &ModelSpec) {
    put("objective", m.objective.clone());
    put("dim", m.dim.to_string());
    put("noise_std", m.noise_std.to_string());
    put("grad_noise_std", m.grad_noise_std.to_string());
    put("error_kind", m.error_kind.to_string());
    put("error_coeff", m.error_coeff.to_string());
    put("error_tilt", m.error_tilt.to_string());
    put("cvar_alpha", m.cvar_alpha.to_string());
    put("perturbation", m.perturbation.to_string());
    if let Some(c) = m.common_random_numbers {
        put("common_random_numbers", c.to_string());
    }
    if let Some(x0) = &m.x0 {
        put("x0", join(x0));
    }
}

fn join<T: Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn pairs_of(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::parse(&std::fs::read_to_string(path)?)
}

pub fn load_probe_config(path: &Path) -> Result<ProbeConfig> {
    ProbeConfig::parse(&std::fs::read_to_string(path)?)
}

pub fn write_config(config: &ExperimentConfig, path: &Path) -> Result<()> {
    std::fs::write(path, config.to_config_string())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    const RATES: &str = "\
# nonconvex rates
algo = rsg
oracle = o1
objective = bounded_nonconvex
dim = 5
noise_std = 1
grad_noise_std = 0.5
x0 = 0.3
n_grid = 64, 128, 256
replications = 10
seed = 42
metric = grad_norm_sq
out = results/rates.csv
";

    #[test]
    fn parses_with_defaults() {
        let c = ExperimentConfig::parse(RATES).unwrap();
        assert_eq!(c.algo, Algorithm::Rsg);
        assert_eq!(c.n_grid, vec![64, 128, 256]);
        assert_eq!((c.gamma0, c.eta0, c.m0), (1.0, 1.0, 1.0));
        assert_eq!(c.schedule_params().unwrap().lipschitz, 2.0);
        assert_eq!(c.model.start().unwrap(), Point::filled(5, 0.3));
        assert_eq!(c.model.error_kind, ErrorKind::None);
    }

    #[test]
    fn round_trip() {
        let c = ExperimentConfig::parse(RATES).unwrap();
        assert_eq!(ExperimentConfig::parse(&c.to_config_string()).unwrap(), c);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.cfg");
        let mut c2 = c.clone();
        c2.beta = Some(0.37);
        c2.lipschitz = Some(1.0 / 3.0);
        c2.model.x0 = Some(vec![0.1, 0.2, 0.3, 0.4, 0.5]);
        c2.model.common_random_numbers = Some(true);
        write_config(&c2, &path).unwrap();
        assert_eq!(load_config(&path).unwrap(), c2);

        let rl = "algo = riskpg\noracle = o1\nobjective = ssp_chain\ndim = 2\nn_grid = 10,20,40\n\
                  replications = 3\nseed = 1\nmetric = policy_risk\nout = r.csv\nssp_slip = 0.2\nssp_horizon = 500\n";
        let c = ExperimentConfig::parse(rl).unwrap();
        assert_eq!(c.ssp.slip, 0.2);
        assert_eq!(ExperimentConfig::parse(&c.to_config_string()).unwrap(), c);
    }

    #[test]
    fn missing_field_is_named() {
        let text = RATES.replace("metric = grad_norm_sq\n", "");
        match ExperimentConfig::parse(&text) {
            Err(Error::MissingField(f)) => assert_eq!(f, "metric"),
            other => panic!("{other:?}"),
        }
    }

    fn field_of(text: &str) -> (usize, String) {
        match ExperimentConfig::parse(text) {
            Err(Error::Config { line, field, .. }) => (line, field),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn errors_carry_line_and_field() {
        assert_eq!(
            field_of(&RATES.replace("dim = 5", "dim = five")),
            (5, "dim".into())
        );
        assert_eq!(
            field_of(&RATES.replace("n_grid = 64, 128, 256", "n_grid = 64, 32, 256")).1,
            "n_grid"
        );
        assert_eq!(field_of(&format!("{RATES}colour = red\n")).1, "colour");
        assert_eq!(field_of(&format!("{RATES}seed = 3\n")).1, "seed");
        assert_eq!(field_of(&format!("{RATES}nonsense\n")).0, 14);
        assert_eq!(
            field_of(&RATES.replace("metric = grad_norm_sq", "metric = policy_risk")).1,
            "metric"
        );
        assert_eq!(field_of(&format!("{RATES}ssp_slip = 0.1\n")).1, "ssp_slip");
        assert_eq!(
            field_of(&RATES.replace("noise_std = 1", "noise_std = -1")).1,
            "noise_std"
        );
        assert_eq!(field_of(&RATES.replace("x0 = 0.3", "x0 = 1,2")).1, "x0");
        assert!(ExperimentConfig::parse(
            &RATES.replace("objective = bounded_nonconvex", "objective = quartic")
        )
        .is_err());
    }

    #[test]
    fn probe_config() {
        let text = "oracle = o2\nobjective = quadratic\ndim = 1\nnoise_std = 1\nprobe_eta = 0.4,0.2\nprobe_m = 1,100\n\
                    seed = 5\nout = probe.csv\nx0 = 1\n";
        let c = ProbeConfig::parse(text).unwrap();
        assert_eq!(c.batches, vec![1, 100]);
        assert_eq!(c.trials, 10_000);
        assert_eq!(ProbeConfig::parse(&c.to_config_string()).unwrap(), c);
        assert!(ProbeConfig::parse(&text.replace("probe_m = 1,100", "probe_m = 0")).is_err());
    }

    proptest! {
        #[test]
        fn writer_round_trips(
            gamma0 in 1e-3f64..1e3,
            eta0 in 1e-3f64..1e3,
            m0 in 1e-3f64..1e3,
            noise in 0.0f64..10.0,
            tilt in -3.0f64..3.0,
            seed in any::<u64>(),
            reps in 1usize..1000,
            start in 1usize..100,
            sgd in any::<bool>(),
        ) {
            let mut c = ExperimentConfig::parse(RATES).unwrap();
            c.algo = if sgd { Algorithm::Sgd } else { Algorithm::Rsg };
            c.gamma0 = gamma0;
            c.eta0 = eta0;
            c.m0 = m0;
            c.model.noise_std = noise;
            c.model.error_tilt = tilt;
            c.seed = seed;
            c.replications = reps;
            c.n_grid = vec![start, start * 2, start * 4];
            prop_assert_eq!(ExperimentConfig::parse(&c.to_config_string()).unwrap(), c);
        }
    }
}
