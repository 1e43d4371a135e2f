use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] qdemon_core::Error),

    #[error("cannot write {path}: {reason}")]
    Write { path: PathBuf, reason: String },

    #[error("worker pool: {0}")]
    Pool(String),
}

impl CliError {
    /// 2 for bad input, 3 for an aborted integrator, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Read { .. } | CliError::Config(_) => 2,
            CliError::Core(e) if e.is_runtime() => 3,
            CliError::Core(_) => 2,
            CliError::Write { .. } | CliError::Pool(_) => 1,
        }
    }
}
