//! Forward kinematics and the pose ↔ feature-vector conversion.

use nalgebra::{Matrix3, Vector3};
use std::sync::Arc;

use crate::clip::{FrameFeature, FrameLayout, MotionClip};
use crate::error::MotionError;
use crate::rotation::Rot6D;
use crate::skeleton::Skeleton;

/// One frame of a character pose: the root's world position plus local
/// rotations per joint (the root's local rotation is its world orientation).
#[derive(Debug, Clone)]
pub struct Pose {
    pub root_position: Vector3<f64>,
    pub rotations: Vec<Matrix3<f64>>,
}

impl Pose {
    pub fn rest(skeleton: &Skeleton) -> Self {
        Pose {
            root_position: Vector3::new(0.0, skeleton.hip_height(), 0.0),
            rotations: vec![Matrix3::identity(); skeleton.joint_count()],
        }
    }
}

/// Global joint positions and rotations for every frame of a clip.
#[derive(Debug, Clone)]
pub struct Fk {
    positions: Vec<Vector3<f64>>,
    rotations: Vec<Matrix3<f64>>,
    n_frames: usize,
    n_joints: usize,
}

impl Fk {
    pub fn frames(&self) -> usize {
        self.n_frames
    }

    pub fn joints(&self) -> usize {
        self.n_joints
    }

    pub fn position(&self, frame: usize, joint: usize) -> Vector3<f64> {
        self.positions[frame * self.n_joints + joint]
    }

    pub fn rotation(&self, frame: usize, joint: usize) -> Matrix3<f64> {
        self.rotations[frame * self.n_joints + joint]
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }
}

/// Compute global joint positions (and rotations) for every frame.
///
/// The root's x/z trajectory is recovered by cumulative integration of the
/// per-frame displacements vx/vz, with the frame-0 root placed at the x/z
/// origin; root height comes from the py channel.
pub fn forward_kinematics(clip: &MotionClip) -> Result<Fk, MotionError> {
    let skeleton = clip.skeleton().clone();
    let poses = poses_from_clip(clip)?;
    fk_poses(&poses, &skeleton)
}

/// FK over explicit poses.
pub fn fk_poses(poses: &[Pose], skeleton: &Skeleton) -> Result<Fk, MotionError> {
    let nj = skeleton.joint_count();
    let mut positions = Vec::with_capacity(poses.len() * nj);
    let mut rotations = Vec::with_capacity(poses.len() * nj);
    for pose in poses {
        if pose.rotations.len() != nj {
            return Err(MotionError::DimensionMismatch {
                expected: nj,
                got: pose.rotations.len(),
            });
        }
        let base = positions.len();
        for (j, joint) in skeleton.joints().iter().enumerate() {
            match joint.parent {
                None => {
                    rotations.push(pose.rotations[j]);
                    positions.push(pose.root_position);
                }
                Some(p) => {
                    let parent_rot: Matrix3<f64> = rotations[base + p];
                    let parent_pos: Vector3<f64> = positions[base + p];
                    rotations.push(parent_rot * pose.rotations[j]);
                    positions.push(parent_pos + parent_rot * joint.offset);
                }
            }
        }
    }
    Ok(Fk {
        positions,
        rotations,
        n_frames: poses.len(),
        n_joints: nj,
    })
}

/// Decode a clip back to world-space poses. The frame-0 root x/z is placed
/// at the origin; later frames integrate the vx/vz displacement channels.
pub fn poses_from_clip(clip: &MotionClip) -> Result<Vec<Pose>, MotionError> {
    let layout = clip.layout();
    let nj = clip.skeleton().joint_count();
    let mut poses = Vec::with_capacity(clip.len());
    let mut x = 0.0;
    let mut z = 0.0;
    for n in 0..clip.len() {
        let row = clip.row(n);
        if n > 0 {
            x += row[layout.vx_col()];
            z += row[layout.vz_col()];
        }
        let mut rotations = Vec::with_capacity(nj);
        for j in 0..nj {
            let r = Rot6D::from_slice(&row[layout.rot_col(j)..layout.rot_col(j) + 6]);
            rotations.push(r.to_matrix()?);
        }
        poses.push(Pose {
            root_position: Vector3::new(x, row[layout.py_col()], z),
            rotations,
        });
    }
    Ok(poses)
}

/// Build the per-frame feature matrix from poses.
///
/// Velocities are backward differences (frame n minus frame n-1); the first
/// frame copies the second frame's velocities so clips do not start from an
/// artificial standstill.
pub fn extract_features(
    poses: &[Pose],
    skeleton: &Arc<Skeleton>,
    fps: f64,
) -> Result<MotionClip, MotionError> {
    if poses.len() < 2 {
        return Err(MotionError::TooShort(poses.len()));
    }
    let nj = skeleton.joint_count();
    let layout = FrameLayout::new(nj);
    let fk = fk_poses(poses, skeleton)?;
    let root = skeleton.root_index();
    let ext = skeleton.extremities();

    let n = poses.len();
    let mut features = Vec::with_capacity(n);
    for i in 0..n {
        let rotations = poses[i]
            .rotations
            .iter()
            .map(Rot6D::from_matrix)
            .collect::<Result<Vec<_>, _>>()?;
        // Velocity source frame: backward difference, frame 0 copies frame 1.
        let (cur, prev) = if i == 0 { (1, 0) } else { (i, i - 1) };
        let dp = poses[cur].root_position - poses[prev].root_position;
        let r_cur = Rot6D::from_matrix(&poses[cur].rotations[root])?.to_array();
        let r_prev = Rot6D::from_matrix(&poses[prev].rotations[root])?.to_array();
        let mut root_angvel = [0.0; 6];
        for (w, (a, b)) in root_angvel.iter_mut().zip(r_cur.iter().zip(&r_prev)) {
            *w = a - b;
        }
        let mut extremity_vel = [Vector3::zeros(); 4];
        for (k, &joint) in ext.iter().enumerate() {
            extremity_vel[k] = fk.position(cur, joint) - fk.position(prev, joint);
        }
        features.push(FrameFeature {
            rotations,
            vx: dp.x,
            py: poses[i].root_position.y,
            vz: dp.z,
            root_angvel,
            extremity_vel,
        });
    }
    let mut frames = Vec::with_capacity(n * layout.dim());
    for f in &features {
        frames.extend_from_slice(&f.to_row(layout));
    }
    MotionClip::new(frames, skeleton.clone(), fps, Vec::new())
}
