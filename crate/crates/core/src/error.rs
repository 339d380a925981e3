use thiserror::Error;

/// Errors raised by the solvers and constructors in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("cannot normalize a field with zero norm")]
    CannotNormalize,

    #[error("field is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("{what} out of range: {detail}")]
    OutOfRange { what: &'static str, detail: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
