use std::process::ExitCode;

use chaoslab_core::ChaosError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error in `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("{context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: ChaosError,
    },

    #[error("cannot write {path}: {source}")]
    Output { path: String, source: std::io::Error },
}

impl CliError {
    pub fn config(key: &str, reason: impl Into<String>) -> Self {
        CliError::Config { key: key.to_string(), reason: reason.into() }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            // An unwritable output directory is a setup problem, like a bad key.
            CliError::Config { .. } | CliError::Output { .. } => ExitCode::from(2),
            CliError::Numerical { .. } => ExitCode::from(3),
        }
    }
}

/// Attaches experiment context to module errors.
pub trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, CliError>;
}

impl<T> Context<T> for Result<T, ChaosError> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, CliError> {
        self.map_err(|source| match source {
            // Parameter problems originate in the configuration.
            ChaosError::InvalidParameter { name, reason } => CliError::config(name, reason),
            source => CliError::Numerical { context: what(), source },
        })
    }
}
