use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty operand list")]
    EmptyOperands,

    #[error("empty key list")]
    EmptyKeys,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("unsupported ambient dimension {0} (maximum 8)")]
    UnsupportedDimension(usize),

    #[error("sum too large; reduce N or H")]
    SumTooLarge,

    #[error("temperature must be strictly positive and finite")]
    InvalidTemperature,

    #[error("use hard routing at zero temperature")]
    ZeroTemperatureAttention,

    #[error("FFN too narrow for construction")]
    FfnTooNarrow,

    #[error("lifted values absent")]
    MissingLiftedValues,

    #[error("log-lifting requires strictly positive values")]
    NonpositiveValues,

    #[error("probe budget too small (minimum {min})")]
    ProbeBudget { min: u64 },

    #[error("guard exceeded: {0}")]
    GuardExceeded(String),

    #[error("non-finite coordinate in input")]
    NonFinite,

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("internal geometry error: {0}")]
    Internal(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
