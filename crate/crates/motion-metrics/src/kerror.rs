//! K-Error: mean global joint position error at the keyframes, in
//! centimeters.

use motion_core::{forward_kinematics, MotionClip};

use crate::MetricsError;

/// (1/J)(1/K) Σ over keyframes and joints of ‖g − ĝ‖₂, FK-derived, in cm.
pub fn k_error(
    generated: &MotionClip,
    reference: &MotionClip,
    keyframes: &[usize],
) -> Result<f64, MetricsError> {
    if generated.skeleton().joint_count() != reference.skeleton().joint_count() {
        return Err(MetricsError::DimensionMismatch {
            expected: reference.skeleton().joint_count(),
            got: generated.skeleton().joint_count(),
        });
    }
    for &k in keyframes {
        if k >= generated.len() || k >= reference.len() {
            return Err(MetricsError::IndexOutOfRange {
                index: k,
                len: generated.len().min(reference.len()),
            });
        }
    }
    if keyframes.is_empty() {
        return Ok(0.0);
    }
    let fk_gen = forward_kinematics(generated)?;
    let fk_ref = forward_kinematics(reference)?;
    let nj = generated.skeleton().joint_count();
    let mut acc = 0.0;
    for &k in keyframes {
        for j in 0..nj {
            acc += (fk_gen.position(k, j) - fk_ref.position(k, j)).norm();
        }
    }
    Ok(acc / (nj * keyframes.len()) as f64 * 100.0)
}
