use std::path::PathBuf;

/// Front-end failure; every variant maps to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("[{}] {}", .0.module(), .0)]
    Core(#[from] qvsolve_core::Error),
    #[error("[io] {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("[model-file] {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("[cli] {0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_validation() => 2,
            CliError::Core(_) => 3,
            CliError::Io { .. } => 4,
            CliError::Parse { .. } | CliError::Usage(_) => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
