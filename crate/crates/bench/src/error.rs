use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] ucacal::Error),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("malformed scenario: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

pub type Result<T> = std::result::Result<T, BenchError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(BenchError::Scenario(msg.into()))
}
