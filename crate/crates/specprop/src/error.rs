//! Error taxonomy shared by every module.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates an operation's contract (wrong range, wrong space tag, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A configuration is internally inconsistent or incomplete.
    #[error("configuration error: {0}")]
    Config(String),
    /// The requested computation is not representable on the given grid.
    #[error("resolution error: {0}")]
    Resolution(String),
    /// A structural precondition on the input data fails.
    #[error("precondition error: {0}")]
    Precondition(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub fn resolution(msg: impl Into<String>) -> Self {
        Error::Resolution(msg.into())
    }
    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
