//! Reference tracks: the retargeted canonical motion projected onto the
//! character's degrees of freedom, with per-frame kinematics recomputed
//! through the simulator's own FK so every target is reachable.

use nalgebra::{Matrix3, Vector3};

use physics_sim::{body_kinematics, ArticulatedCharacter, BaseKind, JointKinematics, SimState};
use retarget::{log_so3, ReferenceMotion};

use crate::error::RlError;

/// One frame of the reference: root pose/velocity, projected joint angles
/// and the resulting global joint kinematics.
#[derive(Debug, Clone)]
pub struct RefState {
    pub root_position: Vector3<f64>,
    pub root_rotation: Matrix3<f64>,
    pub root_lin_vel: Vector3<f64>,
    pub root_ang_vel: Vector3<f64>,
    pub angles: Vec<f64>,
    pub rates: Vec<f64>,
    pub kin: JointKinematics,
}

#[derive(Debug, Clone)]
pub struct ReferenceTrack {
    pub frames: Vec<RefState>,
    pub fps: f64,
}

impl ReferenceTrack {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Project a retargeted reference motion onto the character's DOFs.
    pub fn from_reference_motion(
        character: &ArticulatedCharacter,
        motion: &ReferenceMotion,
    ) -> Result<Self, RlError> {
        let skel = character.skeleton().clone();
        let root = skel.root_index();
        let n = motion.len();
        if n < 2 {
            return Err(RlError::LengthMismatch(format!(
                "reference needs at least 2 frames, got {n}"
            )));
        }
        let fps = motion.fps;

        // Per-frame local rotations → projected dof angles.
        let mut all_angles: Vec<Vec<f64>> = Vec::with_capacity(n);
        for frame in &motion.frames {
            let mut angles = vec![0.0; character.dof_count()];
            for (j, joint) in skel.joints().iter().enumerate() {
                if j == root {
                    continue;
                }
                let parent_rot = joint
                    .parent
                    .map(|p| frame.rotations[p])
                    .unwrap_or_else(Matrix3::identity);
                let local = parent_rot.transpose() * frame.rotations[j];
                joint_angles_from_local(character, j, &local, &mut angles);
            }
            all_angles.push(angles);
        }

        let mut frames = Vec::with_capacity(n);
        for i in 0..n {
            let (cur, prev) = if i == 0 { (1, 0) } else { (i, i - 1) };
            let rates: Vec<f64> = all_angles[cur]
                .iter()
                .zip(&all_angles[prev])
                .map(|(a, b)| (a - b) * fps)
                .collect();
            let src = &motion.frames[i];
            frames.push(build_ref_state(
                character,
                src.positions[root],
                src.rotations[root],
                src.lin_vel[root],
                src.ang_vel[root],
                all_angles[i].clone(),
                rates,
            ));
        }
        Ok(ReferenceTrack { frames, fps })
    }

    /// Build a track directly from root poses and dof angle curves (test
    /// rigs and synthetic references).
    pub fn from_angles(
        character: &ArticulatedCharacter,
        root: &[(Vector3<f64>, Matrix3<f64>)],
        angles: &[Vec<f64>],
        fps: f64,
    ) -> Result<Self, RlError> {
        let n = angles.len();
        if n < 2 || root.len() != n {
            return Err(RlError::LengthMismatch(format!(
                "need matching root/angle curves of length >= 2, got {}/{n}",
                root.len()
            )));
        }
        let mut frames = Vec::with_capacity(n);
        for i in 0..n {
            let (cur, prev) = if i == 0 { (1, 0) } else { (i, i - 1) };
            let rates: Vec<f64> = angles[cur]
                .iter()
                .zip(&angles[prev])
                .map(|(a, b)| (a - b) * fps)
                .collect();
            let lin_vel = (root[cur].0 - root[prev].0) * fps;
            let ang_vel = log_so3(&(root[cur].1 * root[prev].1.transpose())) * fps;
            frames.push(build_ref_state(
                character,
                root[i].0,
                root[i].1,
                lin_vel,
                ang_vel,
                angles[i].clone(),
                rates,
            ));
        }
        Ok(ReferenceTrack { frames, fps })
    }
}

fn build_ref_state(
    character: &ArticulatedCharacter,
    root_position: Vector3<f64>,
    root_rotation: Matrix3<f64>,
    root_lin_vel: Vector3<f64>,
    root_ang_vel: Vector3<f64>,
    angles: Vec<f64>,
    rates: Vec<f64>,
) -> RefState {
    let mut state = SimState::rest(character);
    if character.base() == BaseKind::Free {
        state.set_root_pose(character, root_position, &root_rotation);
        state.set_root_velocity(character, root_lin_vel, root_ang_vel);
    }
    state.joint_angles_mut(character).copy_from_slice(&angles);
    state.joint_rates_mut(character).copy_from_slice(&rates);
    let kin = body_kinematics(&state, character);
    RefState {
        root_position,
        root_rotation,
        root_lin_vel,
        root_ang_vel,
        angles,
        rates,
        kin,
    }
}

/// Project a local joint rotation onto the joint's revolute axes, writing
/// the angles into `out`. Single-axis joints project exactly; multi-axis
/// chains run a few sweeps of per-axis correction.
pub fn joint_angles_from_local(
    character: &ArticulatedCharacter,
    joint: usize,
    local: &Matrix3<f64>,
    out: &mut [f64],
) {
    let slots: Vec<(usize, Vector3<f64>)> = character
        .bodies()
        .iter()
        .filter(|b| b.skeleton_joint == joint)
        .filter_map(|b| b.dof.zip(b.axis))
        .collect();
    match slots.len() {
        0 => {}
        1 => {
            let (d, axis) = slots[0];
            out[d] = log_so3(local).dot(&axis);
        }
        _ => {
            let mut theta = vec![0.0; slots.len()];
            for _ in 0..24 {
                for k in 0..slots.len() {
                    let before = compose(&slots[..k], &theta[..k]);
                    let after = compose(&slots[k + 1..], &theta[k + 1..]);
                    let want = before.transpose() * local * after.transpose();
                    theta[k] = log_so3(&want).dot(&slots[k].1);
                }
            }
            for (k, (d, _)) in slots.iter().enumerate() {
                out[*d] = theta[k];
            }
        }
    }
}

fn compose(slots: &[(usize, Vector3<f64>)], theta: &[f64]) -> Matrix3<f64> {
    let mut r = Matrix3::identity();
    for ((_, axis), &t) in slots.iter().zip(theta) {
        r *= nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(*axis), t)
            .into_inner();
    }
    r
}
