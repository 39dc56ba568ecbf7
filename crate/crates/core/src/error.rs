use thiserror::Error;

/// Errors produced by the kernel pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("index {index} out of range for {context} of size {size}")]
    IndexOutOfRange {
        context: &'static str,
        index: usize,
        size: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("{message} (residual {residual:e})")]
    Numerical { message: String, residual: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("assignment error: {0}")]
    Assignment(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid field `{field}`: {message}")]
    Field { field: &'static str, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn dimension(context: &'static str, expected: usize, found: usize) -> Self {
        Error::Dimension {
            context,
            expected,
            found,
        }
    }
}
