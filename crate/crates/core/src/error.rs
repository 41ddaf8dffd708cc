use thiserror::Error;

/// Errors produced by the optimization, estimation and harness layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty sample set")]
    EmptySamples,

    #[error("iterate diverged at iteration {iteration}")]
    Divergence { iteration: usize },

    #[error("index {k} outside [1, {n}]")]
    OutOfRange { k: usize, n: usize },

    #[error("malformed environment: {0}")]
    MalformedEnvironment(String),

    #[error("config error at line {line}, field `{field}`: {message}")]
    Config {
        line: usize,
        field: String,
        message: String,
    },

    #[error("missing required config field `{0}`")]
    MissingField(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for configuration problems (bad file, missing key, inconsistent settings).
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config { .. } | Error::MissingField(_) | Error::InvalidParameter { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
