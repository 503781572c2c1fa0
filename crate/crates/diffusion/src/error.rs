use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiffusionError {
    #[error("bad noise schedule: {0}")]
    BadSchedule(String),
    #[error("keyframe index {index} out of range for window {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error(transparent)]
    Autodiff(#[from] tensor_autodiff::AdError),
    #[error(transparent)]
    Motion(#[from] motion_core::MotionError),
}
