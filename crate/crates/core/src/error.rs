use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AgarError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("decode error: {0}")]
    Decode(String),
    #[error("build error: {0}")]
    Build(String),
    #[error("external compressor failed: {0}")]
    External(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for AgarError {
    fn from(e: std::io::Error) -> Self {
        AgarError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, AgarError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(AgarError::InvalidArgument(msg.into()))
}
