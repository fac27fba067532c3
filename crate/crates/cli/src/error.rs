use std::fmt;
use std::path::PathBuf;

use spillover_core::ModelError;

use crate::config::Diagnostic;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NO_CONVERGENCE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Invalid(Vec<Diagnostic>),
    Model { context: String, source: ModelError },
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Model {
                source: ModelError::NoConvergence { .. },
                ..
            } => EXIT_NO_CONVERGENCE,
            CliError::Model { .. } => EXIT_INVALID,
            CliError::Io { .. } => EXIT_IO,
        }
    }

    pub fn invalid(path: &str, message: impl Into<String>) -> Self {
        CliError::Invalid(vec![Diagnostic {
            path: path.to_string(),
            line: None,
            column: None,
            message: message.into(),
        }])
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(diags) => {
                write!(f, "invalid configuration ({} problem(s))", diags.len())?;
                for d in diags {
                    write!(f, "\n  {d}")?;
                }
                Ok(())
            }
            CliError::Model { context, source } => write!(f, "{context}: {source}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl std::error::Error for CliError {}

/// Attaches where a model error happened.
pub trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, CliError>;
}

impl<T> Context<T> for Result<T, ModelError> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, CliError> {
        self.map_err(|source| CliError::Model {
            context: what(),
            source,
        })
    }
}
