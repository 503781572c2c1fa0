//! Evaluation suite: a per-frame latent autoencoder, K-FID (Fréchet
//! distance over frame latents), K-Diversity (latent spread within clips),
//! K-Error (global joint position error at keyframes) and the feature-space
//! interpolation baseline.

mod autoenc;
mod baseline;
mod diversity;
mod fid;
mod kerror;
mod report;

pub use autoenc::{train_autoencoder, AutoencoderConfig, LatentEncoder};
pub use baseline::interpolation_baseline;
pub use diversity::{k_diversity, latent_diversity};
pub use fid::{frechet_distance, k_fid};
pub use kerror::k_error;
pub use report::{metrics_csv, ClipMetrics, MetricsReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("empty dataset")]
    EmptyDataset,
    #[error("singular covariance: {0}")]
    SingularCovariance(String),
    #[error("need at least two keyframes covering both endpoints")]
    NeedTwoKeyframes,
    #[error("keyframe index {index} out of range for clip of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Motion(#[from] motion_core::MotionError),
    #[error(transparent)]
    Autodiff(#[from] tensor_autodiff::AdError),
}
