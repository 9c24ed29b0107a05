use std::path::PathBuf;

use eulerize_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{0}")]
    Input(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// 1 for bad inputs, 3 when a computed object fails its own check.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e {
                CoreError::AxiomsNotSatisfied(_)
                | CoreError::NotProportional { .. }
                | CoreError::TZero { .. }
                | CoreError::AlphaDegenerate { .. }
                | CoreError::RankCollapse { .. }
                | CoreError::BoundaryMismatch { .. }
                | CoreError::LeftThroughSide { .. }
                | CoreError::TrappedInRange { .. } => 3,
                _ => 1,
            },
            CliError::Verification(_) => 3,
            _ => 1,
        }
    }
}
