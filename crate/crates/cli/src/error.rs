use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_NOT_CONVERGED: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },

    #[error("{context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: siv_core::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical { .. } => EXIT_NUMERICAL,
            _ => EXIT_CONFIG,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// Maps a core error raised while running `context` (a config path or
    /// data file); only numerical failures keep their own exit code.
    pub fn from_core(path: impl Into<PathBuf>, context: &str, e: siv_core::Error) -> Self {
        let path = path.into();
        match e {
            siv_core::Error::Numerical { .. } => CliError::Numerical { context: format!("{}: {context}", path.display()), source: e },
            siv_core::Error::Input(m) => CliError::Input { path, message: format!("{context}: {m}") },
            other => CliError::Config { path, message: format!("{context}: {other}") },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
