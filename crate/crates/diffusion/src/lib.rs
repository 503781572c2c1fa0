//! Stage 1: character-agnostic motion generation by keyframe-masked
//! denoising diffusion. Noise schedule, forward process, a masked
//! transformer denoiser, the three-term training objective and
//! keyframe-conditioned reverse sampling.

mod error;
mod fkgraph;
mod loss;
mod model;
mod sample;
mod schedule;
mod train;

pub use error::DiffusionError;
pub use fkgraph::fk_positions_graph;
pub use loss::{losses, losses_graph, LossNodes, LossValues, LossWeights};
pub use model::{
    bind_constants, denoise, denoise_forward_graph, mask_col_tensor, mask_compose, DenoiserHyper,
    DenoiserModel,
};
pub use sample::{keyframe_rows, sample_inbetween, sample_inbetween_opts, SampleOptions};
pub use schedule::{gaussian_like, q_sample, NoiseSchedule, ScheduleKind};
pub use train::{loss_curve_csv, train, train_step, TrainConfig};
