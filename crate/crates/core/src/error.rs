use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("NaN is not an extended real")]
    NotANumber,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("function has no finite value")]
    NoFiniteValue,

    #[error("form is not max-plus linear (rho estimate {0})")]
    NotLinear(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("serialization: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;
