use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("amplitude has {amplitude} entries but phase has {phase}")]
    LengthMismatch { amplitude: usize, phase: usize },
    #[error("pattern must have at least one dimension")]
    EmptyPattern,
    #[error("negative amplitude {value} at index {index}")]
    NegativeAmplitude { index: usize, value: f64 },
    #[error("non-finite value at index {index}")]
    NonFiniteValue { index: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("vector has zero norm")]
    ZeroNorm,
    #[error("{what} = {value} is outside its valid range")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
    #[error("invalid pattern id: {0}")]
    InvalidId(String),
    #[error("unknown or unavailable kernel: {0}")]
    UnknownKernel(String),
}
