use std::process::ExitCode;

use thiserror::Error;

/// Failures of a subcommand, split by the exit status they map to.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration, arguments or input files.
    #[error("{0}")]
    Input(String),
    /// An invariant was violated while computing.
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            Self::Input(_) => ExitCode::from(2),
            Self::Internal(_) => ExitCode::from(3),
        }
    }

    /// Input error attributed to configuration key `key`.
    pub fn key(key: &str, message: impl std::fmt::Display) -> Self {
        Self::Input(format!("config key `{key}`: {message}"))
    }

    pub fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        Self::Input(format!("{}: {err}", path.display()))
    }
}

impl From<qtomo::TomoError> for CliError {
    fn from(err: qtomo::TomoError) -> Self {
        Self::Internal(err.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
