use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum RannError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {what} (expected {expected}, got {actual})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("quadrature rule does not match the collocation grid: {0}")]
    RuleMismatch(String),

    #[error("point outside every subdomain: {0:?}")]
    OutsideDomain(Vec<f64>),

    #[error("source iteration did not converge after {iterations} iterations (last change {change:.3e})")]
    NotConverged { iterations: usize, change: f64 },

    #[error("inflow trace of test function is nonzero ({0:.3e})")]
    InflowViolation(f64),

    #[error("configuration error in `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = RannError> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> RannError {
    RannError::InvalidArgument(msg.into())
}
