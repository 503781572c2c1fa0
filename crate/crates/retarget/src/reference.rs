//! Reference features for the tracking reward: the canonical clip's mapped
//! global rotations copied onto the target skeleton, root scaled by the
//! hip-height ratio, velocities by finite differences.

use nalgebra::{Matrix3, Vector3};

use motion_core::{fk_poses, poses_from_clip, MotionClip, Skeleton};

use crate::mapping::JointMapping;
use crate::pose::retarget_pose;
use crate::RetargetError;

/// Per-frame global kinematics of every joint of the target skeleton.
#[derive(Debug, Clone)]
pub struct RefFrame {
    pub positions: Vec<Vector3<f64>>,
    pub rotations: Vec<Matrix3<f64>>,
    /// Linear velocities, m/s.
    pub lin_vel: Vec<Vector3<f64>>,
    /// Angular velocities as axis-angle rates, rad/s.
    pub ang_vel: Vec<Vector3<f64>>,
}

#[derive(Debug, Clone)]
pub struct ReferenceMotion {
    pub frames: Vec<RefFrame>,
    pub fps: f64,
}

impl ReferenceMotion {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Build reference features on `dst` for every frame of a canonical clip.
/// First-frame velocities copy the second frame's.
pub fn reference_features(
    clip: &MotionClip,
    mapping: &JointMapping,
    dst: &Skeleton,
) -> Result<ReferenceMotion, RetargetError> {
    let src = clip.skeleton();
    let poses = poses_from_clip(clip)?;
    let retargeted: Vec<_> = poses
        .iter()
        .map(|p| retarget_pose(p, mapping, src, dst))
        .collect::<Result<_, _>>()?;
    let fk = fk_poses(&retargeted, dst)?;
    let nj = dst.joint_count();
    let fps = clip.fps();

    let n = poses.len();
    let mut frames = Vec::with_capacity(n);
    for i in 0..n {
        let (cur, prev) = if i == 0 { (1, 0) } else { (i, i - 1) };
        let mut positions = Vec::with_capacity(nj);
        let mut rotations = Vec::with_capacity(nj);
        let mut lin_vel = Vec::with_capacity(nj);
        let mut ang_vel = Vec::with_capacity(nj);
        for j in 0..nj {
            positions.push(fk.position(i, j));
            rotations.push(fk.rotation(i, j));
            lin_vel.push((fk.position(cur, j) - fk.position(prev, j)) * fps);
            let delta = fk.rotation(cur, j) * fk.rotation(prev, j).transpose();
            ang_vel.push(log_so3(&delta) * fps);
        }
        frames.push(RefFrame {
            positions,
            rotations,
            lin_vel,
            ang_vel,
        });
    }
    Ok(ReferenceMotion { frames, fps })
}

/// Axis-angle vector of a rotation matrix.
pub fn log_so3(r: &Matrix3<f64>) -> Vector3<f64> {
    let trace = r.trace();
    let cos = ((trace - 1.0) * 0.5).clamp(-1.0, 1.0);
    let angle = cos.acos();
    if angle < 1e-12 {
        return Vector3::zeros();
    }
    let axis = Vector3::new(
        r[(2, 1)] - r[(1, 2)],
        r[(0, 2)] - r[(2, 0)],
        r[(1, 0)] - r[(0, 1)],
    );
    let s = 2.0 * angle.sin();
    if s.abs() < 1e-12 {
        // Near π: fall back to the diagonal form.
        let d = Vector3::new(
            ((r[(0, 0)] + 1.0) * 0.5).max(0.0).sqrt(),
            ((r[(1, 1)] + 1.0) * 0.5).max(0.0).sqrt(),
            ((r[(2, 2)] + 1.0) * 0.5).max(0.0).sqrt(),
        );
        return d * angle;
    }
    axis * (angle / s)
}
