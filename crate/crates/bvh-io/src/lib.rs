//! BVH motion file I/O and synthetic dataset generation.
//!
//! The parser accepts the common HIERARCHY/MOTION dialect (LAFAN1 included),
//! keeps raw channel data in file units, and converts to/from the feature
//! clips used by the rest of the workspace. The synth module produces
//! deterministic parameterized gait clips on a canonical toy skeleton for
//! desk-scale training.

mod convert;
mod error;
mod euler;
mod parse;
mod synth;
mod write;

pub use convert::{bvh_to_clip, clip_to_bvh};
pub use error::BvhError;
pub use euler::{euler_to_matrix, matrix_to_euler_xyz, matrix_to_euler_zyx};
pub use parse::{parse_bvh, BvhDocument, Channel};
pub use synth::{canonical_skeleton, synth_clip, synth_dataset, GaitParams, SynthSpec};
pub use write::write_bvh;
