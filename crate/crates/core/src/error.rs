use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("division by zero")]
    DivideByZero,
    #[error("operands belong to different fields")]
    FieldMismatch,
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("matrix is not full rank")]
    NotFullRank,
    #[error("column space of the dividend is not contained in the divisor's")]
    NotInSpan,
    #[error("rank {rank} is infeasible for a {rows}x{cols} matrix")]
    Rank { rank: usize, rows: usize, cols: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("exact kernel unavailable: {0}")]
    ExactKernelUnavailable(String),
    #[error("enumeration too large: {0}")]
    TooLarge(String),
    #[error("code not constructible: {0}")]
    NotConstructible(String),
    #[error("operation requires a regular rank distribution")]
    RequiresRegular,
    #[error("internal error: {0}")]
    Internal(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("config error at `{path}`: {msg}")]
    Config { path: String, msg: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub fn config(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
