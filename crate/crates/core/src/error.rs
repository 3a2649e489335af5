use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid depth {value} at pixel index {index}")]
    InvalidDepth { index: usize, value: f64 },

    #[error("point is behind the camera (z = {0})")]
    BehindCamera(f64),

    #[error("depth map has a degenerate range (constant depth {0} m)")]
    DegenerateRange(f64),

    #[error("invalid depth range: z_min = {z_min}, z_max = {z_max}")]
    InvalidRange { z_min: f64, z_max: f64 },

    #[error("simulation config: {0}")]
    SimConfig(String),

    #[error("scene generation failed: {0}")]
    Generation(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("training: {0}")]
    Training(String),

    #[error("missing checkpoint `{name}` at {path}")]
    MissingCheckpoint { name: String, path: PathBuf },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: malformed file: {reason}")]
    Format { path: PathBuf, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
