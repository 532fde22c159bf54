use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("noise scale must be positive and finite, got {0}")]
    InvalidScale(f64),

    #[error("accuracy parameter {name} = {value} must lie in (0, 1/2)")]
    InvalidAccuracy { name: &'static str, value: f64 },

    #[error("invalid privacy parameters: {0}")]
    InvalidPrivacy(String),

    #[error("the Gaussian mechanism requires delta > 0")]
    GaussianNeedsDelta,

    #[error("output dimension k = {k} is not a positive multiple of sparsity s = {s}")]
    InvalidBlockStructure { k: usize, s: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("invalid vector: {0}")]
    InvalidVector(String),

    #[error("scheme mismatch: {0}")]
    SchemeMismatch(String),

    #[error("sketches cannot be combined: {field} differs ({left} vs {right})")]
    IncompatibleSketches {
        field: &'static str,
        left: String,
        right: String,
    },

    #[error("exhaustive enumeration needs {configs:.3e} configurations, limit is {limit:.0e}")]
    TooManyConfigs { configs: f64, limit: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("serialization: {0}")]
    Serialization(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
