use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid chain: length {len} is outside [1, {m}]")]
    InvalidChain { len: usize, m: usize },

    #[error("box sequence must contain at least one box")]
    EmptyBoxes,

    #[error("threshold spec does not match ring: {0}")]
    ThresholdMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("enumeration too large: {size} sequences exceeds guard {limit}")]
    ScaleGuard { size: u128, limit: u128 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for errors caused by malformed input data rather than configuration.
    pub fn is_data_error(&self) -> bool {
        matches!(self, Error::Parse { .. } | Error::DimensionMismatch { .. })
    }
}
