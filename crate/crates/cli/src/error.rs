use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid {field}: {message}")]
    Config { field: &'static str, message: String },
    #[error("snapshot does not match the run configuration: {0}")]
    Mismatch(String),
    #[error("malformed snapshot {path}: {message}")]
    Snapshot { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("run failed at step {step}: {source}; last good snapshot: {}", last_snapshot.as_ref().map_or("none".into(), |p| p.display().to_string()))]
    Run { step: u64, source: bosewalk_core::Error, last_snapshot: Option<PathBuf> },
    #[error(transparent)]
    Core(#[from] bosewalk_core::Error),
}

impl CliError {
    pub fn config(field: &'static str, message: impl ToString) -> Self {
        Self::Config { field, message: message.to_string() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Self {
        let path = path.into();
        move |source| Self::Io { path, source }
    }

    /// 2 for input that is rejected before or instead of running, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } | Self::Mismatch(_) | Self::Snapshot { .. } => 2,
            Self::Io { .. } | Self::Run { .. } | Self::Core(_) => 1,
        }
    }
}
