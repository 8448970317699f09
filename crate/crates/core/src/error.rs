use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// Two inputs that must agree in shape do not.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    /// A flow field carries the wrong direction tag for the consumer.
    #[error("contract violation: expected {expected} flow, got {actual}")]
    Direction {
        expected: crate::flow::FlowDirection,
        actual: crate::flow::FlowDirection,
    },
    /// The flow solver produced a non-finite objective.
    #[error("solver failure at level {level}, iteration {iteration}: {reason}")]
    Solver {
        level: usize,
        iteration: usize,
        reason: String,
    },
    /// Malformed on-disk data.
    #[error("bad data in {path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Image(#[from] image::ImageError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn shape(msg: impl Into<String>) -> Error {
    Error::ShapeMismatch(msg.into())
}
