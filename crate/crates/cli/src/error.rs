use std::path::PathBuf;
use std::process::ExitCode;

use palm_core::PalmError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),

    #[error("cannot read config {path}: {source}")]
    Config {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("audit failed:\n{0}")]
    Audit(String),

    #[error(transparent)]
    Palm(#[from] PalmError),
}

impl CliError {
    /// 1 for a failed audit, 2 for anything wrong with the input.
    pub fn exit_code_value(&self) -> u8 {
        match self {
            CliError::Audit(_) | CliError::Palm(PalmError::AuditFailure { .. }) => 1,
            _ => 2,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.exit_code_value())
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
