use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the harness. Per-trial outcomes (extraction failure,
/// compile failure, transport failure) are data, not errors; only conditions
/// that invalidate a run or a call contract end up here.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("corpus error: {0}")]
    Corpus(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("prompt template error: {0}")]
    Template(String),

    #[error("transport failure after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("infrastructure error: {0}")]
    Infra(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
