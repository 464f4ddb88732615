use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("zero-norm vector")]
    ZeroVector,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("measurement error: {0}")]
    Measurement(String),

    #[error("routing failure: {0}")]
    Routing(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse error classes, used by the command line front-end for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Domain,
    Simulation,
    Measurement,
    Io,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::DimensionMismatch(..) | Error::Config(_) | Error::Parse { .. } => {
                ErrorCategory::Config
            }
            Error::ZeroVector | Error::Validation(_) => ErrorCategory::Domain,
            Error::Routing(_) => ErrorCategory::Simulation,
            Error::Measurement(_) => ErrorCategory::Measurement,
            Error::Io(_) => ErrorCategory::Io,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
