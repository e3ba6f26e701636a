use std::path::PathBuf;

/// Errors raised across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("space too large: {n_states} states exceeds the limit of {limit}")]
    SpaceTooLarge { n_states: u128, limit: u128 },

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("linear solve failed: {0}")]
    Singular(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("{context}: {source}")]
    Io {
        context: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

impl Error {
    /// Stable variant name for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::SpaceTooLarge { .. } => "space_too_large",
            Error::InvalidConfiguration(_) => "invalid_configuration",
            Error::NonFinite(_) => "non_finite",
            Error::Singular(_) => "singular",
            Error::NotConverged { .. } => "not_converged",
            Error::Io { .. } => "io",
            Error::Config { .. } => "config",
            Error::Parse(_) => "parse",
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            context: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
