//! Minimal dense-tensor engine with reverse-mode automatic differentiation
//! and the neural building blocks used by the denoiser, autoencoder and
//! policy networks: matmul/layer-norm/softmax and friends with exact
//! analytic backwards, multi-head attention with skewed relative position
//! logits, sinusoidal timestep embeddings, Adam, gradient checking and a
//! binary checkpoint format.

mod adam;
mod checkpoint;
mod error;
mod gradcheck;
mod graph;
mod nn;
mod params;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use error::AdError;
pub use gradcheck::{grad_check, GradCheckReport};
pub use graph::{Graph, NodeId};
pub use nn::{
    layer_norm, linear, mhsa, pffn, relative_index_window, relative_logits_direct,
    sinusoidal_embedding, skew,
};
pub use params::{bind, Bound, Params};
pub use tensor::{matmul, matmul_nt, matmul_tn, Tensor};
