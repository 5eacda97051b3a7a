use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("sample index {index} out of range for {count} samples")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty index list")]
    EmptyBatch,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("optimum unavailable: {0}")]
    OptimumUnavailable(String),

    #[error("rule `{rule}` requires {oracle}")]
    MissingOracle {
        rule: &'static str,
        oracle: &'static str,
    },

    #[error("diverging scaling: mean gradient vanished while per-sample gradients did not")]
    DivergingScaling,

    #[error("step undefined: zero denominator with positive numerator")]
    StepUndefined,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("matrix is identically zero")]
    ZeroMatrix,

    #[error("eigen-decomposition did not converge in {0} sweeps")]
    NoConvergence(usize),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
