use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("simulation diverged: {0}")]
    Diverged(String),
    #[error("bad character description: {0}")]
    BadCharacter(String),
    #[error("bad environment description: {0}")]
    BadEnvironment(String),
    #[error(transparent)]
    Motion(#[from] motion_core::MotionError),
}
