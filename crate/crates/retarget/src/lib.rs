//! Kinematic retargeting: global-rotation transfer over a joint mapping
//! with hip-height root scaling, collider scaling and reference-feature
//! construction for the tracking reward.

mod colliders;
mod mapping;
mod pose;
mod reference;

pub use colliders::{scale_colliders, AxisAlignedBox};
pub use mapping::JointMapping;
pub use pose::{retarget_keyframes, retarget_pose, KeyframePose};
pub use reference::{log_so3, reference_features, RefFrame, ReferenceMotion};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RetargetError {
    #[error("mapping mismatch: {0}")]
    MappingMismatch(String),
    #[error("collider scale ratio must be positive, got {0}")]
    BadRatio(f64),
    #[error(transparent)]
    Motion(#[from] motion_core::MotionError),
}
