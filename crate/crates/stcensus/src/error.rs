use thiserror::Error;

/// Crate-wide error type.
///
/// `Argument` maps to CLI exit code 2, the numeric/verification variants to 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("arithmetic overflow: {0}")]
    Overflow(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed cache file: {0}")]
    Cache(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    /// CLI exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Argument(_) | Error::Overflow(_) => 2,
            _ => 3,
        }
    }
}
