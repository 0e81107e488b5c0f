use thiserror::Error;

/// Errors raised by the library surface.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A complexity measure or allocation is undefined on this input (tied best arms,
    /// all-equal means).
    #[error("degenerate instance: {0}")]
    Degenerate(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("data format error: {0}")]
    DataFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;
