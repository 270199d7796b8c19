use thiserror::Error;

/// Errors raised by configuration validation, kernel construction and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid dimension {0}: need d >= 2")]
    InvalidDimension(usize),

    #[error("point {index} has norm {norm}, off the unit sphere")]
    OffSphere { index: usize, norm: f64 },

    #[error("weight {index} is negative ({value})")]
    NegativeWeight { index: usize, value: f64 },

    #[error("weights sum to {0}, expected 1")]
    WeightSum(f64),

    #[error("configuration is empty")]
    Empty,

    #[error("{0} points and {1} weights")]
    LengthMismatch(usize, usize),

    #[error("need at least {needed} support points, found {found}")]
    TooFewPoints { needed: usize, found: usize },

    #[error("points are not contained in an open hemisphere")]
    NoCap,

    #[error("argument {value} outside [-1, 1]")]
    OutOfDomain { value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("kernel is not supported here: {0}")]
    UnsupportedKernel(String),

    #[error("invalid block at level {level}: {reason}")]
    InvalidBlock { level: usize, reason: String },

    #[error("pole is not orthogonal to the source hyperplane (inner product {0})")]
    PoleNotOrthogonal(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
