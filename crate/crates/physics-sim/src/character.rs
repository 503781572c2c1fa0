//! Articulated character construction: skeleton joints become chains of
//! revolute bodies (one per DOF) with capsule geometry, auto-derived mass
//! properties and PD gains.

use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use std::sync::Arc;

use motion_core::Skeleton;

use crate::error::SimError;

/// How the root connects to the world.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseKind {
    /// 6-DOF free joint (position + quaternion in q).
    Free,
    /// Welded to the world (test rigs, pendulums).
    Fixed,
}

/// Degrees of freedom requested for one skeleton joint.
#[derive(Debug, Clone)]
pub struct JointDofs {
    pub joint: usize,
    /// Revolute axes applied in order; empty welds the joint rigidly.
    pub axes: Vec<Vector3<f64>>,
}

/// Build-time knobs. Masses and gains may be overridden per joint through
/// the character file; these are the fallbacks.
#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub base: BaseKind,
    pub density: f64,
    pub default_radius: f64,
    /// PD natural frequency (rad/s) used for kp = ω²·I_eff.
    pub pd_omega: f64,
    /// PD damping ratio used for kd = 2ζ·sqrt(kp·I_eff).
    pub pd_zeta: f64,
    /// Torque limit as a multiple of kp (torque at 1 rad error capped at
    /// `torque_limit_factor · kp`).
    pub torque_limit_factor: f64,
    /// Skeleton joints whose bodies may touch the ground without counting
    /// as a fall (feet, or a grounded base for toy rigs).
    pub contact_joints: Vec<usize>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            base: BaseKind::Free,
            density: 1000.0,
            default_radius: 0.05,
            pd_omega: 20.0,
            pd_zeta: 1.0,
            torque_limit_factor: 0.6,
            contact_joints: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Capsule {
    pub radius: f64,
    /// Segment end in the body's local frame (segment start is the origin).
    pub end: Vector3<f64>,
}

/// One rigid body of the expanded chain.
#[derive(Debug, Clone)]
pub struct Body {
    pub parent: Option<usize>,
    pub skeleton_joint: usize,
    /// Rest offset from the parent body origin, in the parent frame.
    pub offset: Vector3<f64>,
    /// Revolute axis in the local frame; `None` for the root and welds.
    pub axis: Option<Vector3<f64>>,
    /// Actuated DOF index, when this body carries one.
    pub dof: Option<usize>,
    pub mass: f64,
    /// COM in the local frame.
    pub com: Vector3<f64>,
    /// Rotational inertia about the COM, local frame.
    pub inertia: Matrix3<f64>,
    pub capsule: Option<Capsule>,
    pub contact_allowed: bool,
}

/// Per-DOF PD gains.
#[derive(Debug, Clone, Copy)]
pub struct PdGains {
    pub kp: f64,
    pub kd: f64,
}

#[derive(Debug, Clone)]
pub struct ArticulatedCharacter {
    skeleton: Arc<Skeleton>,
    bodies: Vec<Body>,
    base: BaseKind,
    /// Last body of each skeleton joint's chain.
    joint_body: Vec<usize>,
    pd_gains: Vec<PdGains>,
    torque_limits: Vec<f64>,
    dof_count: usize,
}

impl ArticulatedCharacter {
    /// Expand a skeleton into a rigid-body chain. Each non-root entry of
    /// `dofs` inserts one body per axis; joints without an entry are welded.
    pub fn from_skeleton(
        skeleton: Arc<Skeleton>,
        dofs: &[JointDofs],
        options: &BuildOptions,
    ) -> Result<Self, SimError> {
        let nj = skeleton.joint_count();
        let mut axes_per_joint: Vec<Vec<Vector3<f64>>> = vec![Vec::new(); nj];
        for d in dofs {
            if d.joint >= nj {
                return Err(SimError::BadCharacter(format!(
                    "dof spec names joint {} of {}",
                    d.joint, nj
                )));
            }
            if d.joint == skeleton.root_index() {
                return Err(SimError::BadCharacter(
                    "the root has no revolute dofs; it is free or fixed".into(),
                ));
            }
            for a in &d.axes {
                if a.norm() < 1e-9 {
                    return Err(SimError::BadCharacter("zero joint axis".into()));
                }
            }
            axes_per_joint[d.joint] = d.axes.iter().map(|a| a.normalize()).collect();
        }

        // Bone direction for geometry: towards the mean child offset, or a
        // short stub for leaves.
        let bone_end = |j: usize| -> Vector3<f64> {
            let children = skeleton.children(j);
            if children.is_empty() {
                Vector3::new(0.0, -0.1, 0.0)
            } else {
                children
                    .iter()
                    .map(|&c| skeleton.joints()[c].offset)
                    .sum::<Vector3<f64>>()
                    / children.len() as f64
            }
        };

        let mut bodies: Vec<Body> = Vec::new();
        let mut joint_body = vec![usize::MAX; nj];
        let mut dof_count = 0usize;
        for (j, joint) in skeleton.joints().iter().enumerate() {
            let parent_body = joint.parent.map(|p| joint_body[p]);
            let axes = &axes_per_joint[j];
            let chain_len = if j == skeleton.root_index() {
                0
            } else {
                axes.len()
            };
            let end = bone_end(j);
            let radius = options.default_radius;
            let len = end.norm();
            let volume = std::f64::consts::PI * radius * radius * len
                + 4.0 / 3.0 * std::f64::consts::PI * radius.powi(3);
            let mass = options.density * volume;
            let com = end * 0.5;
            let inertia = capsule_inertia(mass, radius, len, &end);
            let contact_allowed = options.contact_joints.contains(&j);
            let capsule = Some(Capsule { radius, end });

            if j == skeleton.root_index() {
                bodies.push(Body {
                    parent: None,
                    skeleton_joint: j,
                    offset: Vector3::zeros(),
                    axis: None,
                    dof: None,
                    mass,
                    com,
                    inertia,
                    capsule,
                    contact_allowed,
                });
                joint_body[j] = bodies.len() - 1;
                continue;
            }

            let parent_body = parent_body.ok_or_else(|| {
                SimError::BadCharacter("skeleton must be topologically ordered".into())
            })?;
            if chain_len == 0 {
                // Welded joint: rigid body with no dof.
                bodies.push(Body {
                    parent: Some(parent_body),
                    skeleton_joint: j,
                    offset: joint.offset,
                    axis: None,
                    dof: None,
                    mass,
                    com,
                    inertia,
                    capsule,
                    contact_allowed,
                });
            } else {
                for (k, axis) in axes.iter().enumerate() {
                    let last = k == chain_len - 1;
                    bodies.push(Body {
                        parent: Some(if k == 0 {
                            parent_body
                        } else {
                            bodies.len() - 1
                        }),
                        skeleton_joint: j,
                        offset: if k == 0 { joint.offset } else { Vector3::zeros() },
                        axis: Some(*axis),
                        dof: Some(dof_count),
                        // Intermediate bodies of a multi-axis joint are
                        // massless frames; the last link carries it all.
                        mass: if last { mass } else { 0.0 },
                        com: if last { com } else { Vector3::zeros() },
                        inertia: if last { inertia } else { Matrix3::zeros() },
                        capsule: if last { capsule } else { None },
                        contact_allowed: last && contact_allowed,
                    });
                    dof_count += 1;
                }
            }
            joint_body[j] = bodies.len() - 1;
        }

        let mut character = ArticulatedCharacter {
            skeleton,
            bodies,
            base: options.base,
            joint_body,
            pd_gains: vec![PdGains { kp: 0.0, kd: 0.0 }; dof_count],
            torque_limits: vec![0.0; dof_count],
            dof_count,
        };
        character.tune_default_gains(options);
        Ok(character)
    }

    /// Default gains from the rest-pose effective inertia per DOF:
    /// kp = ω²·I_eff, kd = 2ζ·sqrt(kp·I_eff).
    fn tune_default_gains(&mut self, options: &BuildOptions) {
        let rest = crate::state::SimState::rest(self);
        let m = crate::dynamics::mass_matrix(self, &rest);
        let base = self.base_dofs();
        for d in 0..self.dof_count {
            let i_eff = m[(base + d, base + d)].max(1e-6);
            let kp = options.pd_omega * options.pd_omega * i_eff;
            let kd = 2.0 * options.pd_zeta * (kp * i_eff).sqrt();
            self.pd_gains[d] = PdGains { kp, kd };
            self.torque_limits[d] = (options.torque_limit_factor * kp).max(1e-3);
        }
    }

    pub fn skeleton(&self) -> &Arc<Skeleton> {
        &self.skeleton
    }

    pub fn bodies(&self) -> &[Body] {
        &self.bodies
    }

    pub(crate) fn bodies_mut(&mut self) -> &mut [Body] {
        &mut self.bodies
    }

    pub fn base(&self) -> BaseKind {
        self.base
    }

    /// Unactuated base velocity coordinates (6 for a free base).
    pub fn base_dofs(&self) -> usize {
        match self.base {
            BaseKind::Free => 6,
            BaseKind::Fixed => 0,
        }
    }

    /// Actuated DOF count.
    pub fn dof_count(&self) -> usize {
        self.dof_count
    }

    /// Total velocity-space dimension.
    pub fn nv(&self) -> usize {
        self.base_dofs() + self.dof_count
    }

    /// Position-space dimension (quaternion root takes 7).
    pub fn nq(&self) -> usize {
        match self.base {
            BaseKind::Free => 7 + self.dof_count,
            BaseKind::Fixed => self.dof_count,
        }
    }

    pub fn body_of_joint(&self, joint: usize) -> usize {
        self.joint_body[joint]
    }

    pub fn pd_gains(&self) -> &[PdGains] {
        &self.pd_gains
    }

    pub fn set_pd_gains(&mut self, dof: usize, gains: PdGains) {
        self.pd_gains[dof] = gains;
    }

    pub fn torque_limits(&self) -> &[f64] {
        &self.torque_limits
    }

    pub fn set_torque_limit(&mut self, dof: usize, limit: f64) {
        self.torque_limits[dof] = limit;
    }

    pub fn total_mass(&self) -> f64 {
        self.bodies.iter().map(|b| b.mass).sum()
    }

    /// DOF indices owned by a skeleton joint, in application order.
    pub fn joint_dofs(&self, joint: usize) -> Vec<usize> {
        self.bodies
            .iter()
            .filter(|b| b.skeleton_joint == joint)
            .filter_map(|b| b.dof)
            .collect()
    }

    /// Local rotation of a skeleton joint given the angle vector.
    pub fn joint_local_rotation(&self, joint: usize, angles: &[f64]) -> Matrix3<f64> {
        let mut r = Matrix3::identity();
        for b in self.bodies.iter().filter(|b| b.skeleton_joint == joint) {
            if let (Some(axis), Some(d)) = (b.axis, b.dof) {
                r *= axis_rotation(&axis, angles[d]);
            }
        }
        r
    }
}

pub(crate) fn axis_rotation(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    UnitQuaternion::from_axis_angle(&nalgebra::Unit::new_normalize(*axis), angle)
        .to_rotation_matrix()
        .into_inner()
}

/// Capsule inertia about its COM: cylinder plus end caps along the segment
/// direction, rotated into the local frame.
fn capsule_inertia(mass: f64, radius: f64, length: f64, end: &Vector3<f64>) -> Matrix3<f64> {
    if mass <= 0.0 {
        return Matrix3::zeros();
    }
    let r2 = radius * radius;
    let (i_axis, i_trans) = if length < 1e-9 {
        let i = 0.4 * mass * r2;
        (i, i)
    } else {
        // Split mass between cylinder and hemispherical caps by volume.
        let v_cyl = std::f64::consts::PI * r2 * length;
        let v_cap = 4.0 / 3.0 * std::f64::consts::PI * radius * r2;
        let m_cyl = mass * v_cyl / (v_cyl + v_cap);
        let m_cap = mass - m_cyl;
        let h = length * 0.5;
        let i_axis = 0.5 * m_cyl * r2 + 0.4 * m_cap * r2;
        let i_trans = m_cyl * (3.0 * r2 + length * length) / 12.0
            + m_cap * (0.4 * r2 + h * h + 0.375 * radius * length);
        (i_axis, i_trans)
    };
    // Principal frame: z along the bone.
    let principal = Matrix3::from_diagonal(&Vector3::new(i_trans, i_trans, i_axis));
    let z = if length < 1e-9 {
        Vector3::z()
    } else {
        end / length
    };
    let r = rotation_to(&Vector3::z(), &z);
    r * principal * r.transpose()
}

/// Rotation taking `from` to `to` (both unit).
fn rotation_to(from: &Vector3<f64>, to: &Vector3<f64>) -> Matrix3<f64> {
    UnitQuaternion::rotation_between(from, to)
        .unwrap_or_else(|| {
            // Antiparallel: rotate π about any perpendicular axis.
            let perp = if from.x.abs() < 0.9 {
                Vector3::x()
            } else {
                Vector3::y()
            };
            let axis = from.cross(&perp).normalize();
            UnitQuaternion::from_axis_angle(&nalgebra::Unit::new_normalize(axis), std::f64::consts::PI)
        })
        .to_rotation_matrix()
        .into_inner()
}

#[cfg(test)]
mod tests {
    use super::*;
    use motion_core::Joint;

    pub(crate) fn two_link_skeleton() -> Arc<Skeleton> {
        let joints = vec![
            Joint::new("Base", None, Vector3::zeros()),
            Joint::new("Link1", Some(0), Vector3::new(0.0, -0.1, 0.0)),
            Joint::new("Link2", Some(1), Vector3::new(0.0, -0.4, 0.0)),
        ];
        Arc::new(Skeleton::with_extremities(joints, 1.0, [2, 2, 2, 2]).unwrap())
    }

    #[test]
    fn expansion_counts_dofs() {
        let skel = two_link_skeleton();
        let dofs = vec![
            JointDofs {
                joint: 1,
                axes: vec![Vector3::x(), Vector3::z()],
            },
            JointDofs {
                joint: 2,
                axes: vec![Vector3::x()],
            },
        ];
        let c =
            ArticulatedCharacter::from_skeleton(skel, &dofs, &BuildOptions::default()).unwrap();
        assert_eq!(c.dof_count(), 3);
        assert_eq!(c.nv(), 9);
        assert_eq!(c.nq(), 10);
        assert_eq!(c.bodies().len(), 4); // root + 2 for joint1 + 1 for joint2
        assert_eq!(c.joint_dofs(1), vec![0, 1]);
        // Masses positive on load-bearing links, SPD inertia.
        for b in c.bodies() {
            if b.dof.is_none() || b.capsule.is_some() {
                assert!(b.mass > 0.0);
                let sym = (b.inertia - b.inertia.transpose()).abs().max();
                assert!(sym < 1e-12);
            }
        }
        // Default gains were tuned.
        assert!(c.pd_gains().iter().all(|g| g.kp > 0.0 && g.kd > 0.0));
    }

    #[test]
    fn joint_local_rotation_composes_axes() {
        let skel = two_link_skeleton();
        let dofs = vec![JointDofs {
            joint: 1,
            axes: vec![Vector3::x(), Vector3::y()],
        }];
        let c =
            ArticulatedCharacter::from_skeleton(skel, &dofs, &BuildOptions::default()).unwrap();
        let angles = vec![0.3, -0.7];
        let got = c.joint_local_rotation(1, &angles);
        let expected = axis_rotation(&Vector3::x(), 0.3) * axis_rotation(&Vector3::y(), -0.7);
        assert!((got - expected).abs().max() < 1e-12);
    }
}
