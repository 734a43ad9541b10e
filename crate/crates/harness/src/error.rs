use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Malformed or inconsistent configuration; exit status 1.
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] magrelax::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    /// A `check` found violations.
    #[error("{0} violation(s) recorded")]
    Violations(usize),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            HarnessError::Solver(magrelax::Error::InvalidConfig(_)) => 1,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        HarnessError::Format { path: path.into(), message: message.to_string() }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
