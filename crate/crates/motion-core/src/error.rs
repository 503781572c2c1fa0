use thiserror::Error;

/// Errors raised by kinematic and feature-space operations.
#[derive(Debug, Error)]
pub enum MotionError {
    #[error("degenerate 6D rotation: {0}")]
    DegenerateRotation(String),
    #[error("matrix is not a rotation: {0}")]
    NotARotation(String),
    #[error("clip too short: {0} frame(s), need at least 2")]
    TooShort(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid skeleton: {0}")]
    InvalidSkeleton(String),
    #[error("frame index {index} out of range for clip of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
}
