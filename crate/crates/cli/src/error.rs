use std::path::Path;

/// Failure of a CLI command, mapped onto the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Io(_) => 3,
            Self::CheckFailed(_) => 4,
        }
    }

    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        Self::Io(format!("{}: {err}", path.display()))
    }
}

impl From<bai_core::Error> for CliError {
    fn from(e: bai_core::Error) -> Self {
        Self::Usage(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
