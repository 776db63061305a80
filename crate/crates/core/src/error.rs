use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Every entry of a scale curve fell below the degeneracy floor.
    #[error("degenerate scale: {0}")]
    DegenerateScale(String),

    #[error("{path}: line {line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },

    #[error("not enough local data near u = {position:.6} ({found} points within bandwidth, need {needed})")]
    SparseData { position: f64, found: usize, needed: usize },

    #[error("cell (unit {unit}, period {period}): {source}")]
    Cell {
        unit: String,
        period: i64,
        #[source]
        source: Box<Error>,
    },

    #[error("ragged panel: {0}")]
    Structural(String),

    #[error("malformed panel file: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
