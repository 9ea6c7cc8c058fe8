use thiserror::Error;

/// Errors surfaced by model construction and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain size mismatch: expected {expected}, got {got}")]
    DomainMismatch { expected: usize, got: usize },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty sample")]
    EmptySample,

    #[error("empty classifier class")]
    EmptyClass,

    #[error("no class member has mass at or below the variance level")]
    EmptyVarianceFilter,

    #[error("Kullback-Leibler information is infinite at margin 1")]
    InfiniteDivergence,

    #[error("Kullback-Leibler support violation: second distribution misses mass of the first")]
    SupportViolation,

    #[error("fixed-point solver could not bracket a root: {0}")]
    NoBracket(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
