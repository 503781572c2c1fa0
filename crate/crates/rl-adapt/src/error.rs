use thiserror::Error;

#[derive(Debug, Error)]
pub enum RlError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("length mismatch between batch fields: {0}")]
    LengthMismatch(String),
    #[error("simulation diverged at frame {frame}: {msg}")]
    SimDiverged { frame: usize, msg: String },
    #[error(transparent)]
    Sim(#[from] physics_sim::SimError),
    #[error(transparent)]
    Retarget(#[from] retarget::RetargetError),
    #[error(transparent)]
    Autodiff(#[from] tensor_autodiff::AdError),
    #[error(transparent)]
    Motion(#[from] motion_core::MotionError),
}
