use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("fractional order {0} must lie strictly inside (0, 1)")]
    InvalidOrder(f64),

    #[error("gamma function argument must be positive, got {0}")]
    NonPositiveGamma(f64),

    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },

    #[error("{what} must be nonnegative, got {value}")]
    Negative { what: &'static str, value: f64 },

    #[error("operation requires a strictly fractional order, got the classical limit 1")]
    ClassicalOrderRejected,

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("covariance kernel is singular at coincident points")]
    SingularCovariance,

    #[error("mode covariance factorization failed even after maximal jitter")]
    FactorizationFailed,

    #[error("operands were built on mismatched bases or grids: {0}")]
    Mismatch(String),

    #[error("trajectory too short: need at least {needed} tail points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("path {path} overflowed at step {step} (t = {time})")]
    Overflow { path: usize, step: usize, time: f64 },

    #[error("config parse error at line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
