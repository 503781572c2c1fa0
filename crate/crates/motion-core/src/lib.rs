//! Core motion representation: skeletons, rotations, forward kinematics and
//! the per-frame feature vector shared by the generation and adaptation stages.
//!
//! Everything in this crate is plain data plus pure functions. Types are
//! immutable after construction and safe to share across threads.

mod clip;
mod error;
mod fk;
mod rotation;
mod skeleton;

pub use clip::{denormalize, normalize, FrameFeature, FrameLayout, KeyframeMask, MotionClip, NormStats};
pub use error::MotionError;
pub use fk::{extract_features, fk_poses, forward_kinematics, poses_from_clip, Fk, Pose};
pub use rotation::Rot6D;
pub use skeleton::{Joint, Skeleton};

/// Floor applied to per-channel standard deviations so constant channels
/// normalize to zero instead of NaN.
pub const STD_FLOOR: f64 = 1e-6;

/// Number of velocity channels appended after the rotation block:
/// root vx, py, vz plus the 18-dimensional extremity/angular velocity term.
pub const ROOT_CHANNELS: usize = 3;

/// Width of the auxiliary velocity term `u`: a 6D-rate root angular velocity
/// plus global linear velocities of both hands and both feet.
pub const U_CHANNELS: usize = 18;
