use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph is not decomposable")]
    NotDecomposable,

    #[error("separator {0} does not occur in the junction tree")]
    UnknownSeparator(String),

    #[error("inconsistent expansion: {0}")]
    InconsistentExpansion(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty backward support for a target-positive tree")]
    EmptySupport,

    #[error("all particle weights are zero at step {step}")]
    AllWeightsZero { step: usize },

    #[error("reference trajectory is invalid: {0}")]
    InvalidReference(String),

    #[error("{what} = {value} exceeds the supported limit {limit}")]
    TooLarge {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("matrix is not positive definite (leading minor {0})")]
    NotPositiveDefinite(usize),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
