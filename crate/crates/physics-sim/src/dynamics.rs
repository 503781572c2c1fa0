//! Reduced-coordinate dynamics in world coordinates: a kinematics pass, the
//! composite-rigid-body mass matrix and recursive Newton–Euler bias forces.
//! Working about the world origin removes every inter-frame transform from
//! both algorithms.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::character::{axis_rotation, ArticulatedCharacter, BaseKind};
use crate::spatial::{
    ang, cross_force, cross_motion, lin, revolute_subspace, spatial, spatial_inertia, SpatialMat,
    SpatialVec,
};
use crate::state::SimState;

/// World kinematics of one body.
#[derive(Debug, Clone)]
pub struct BodyFrame {
    pub rotation: Matrix3<f64>,
    /// World position of the body origin (joint anchor).
    pub position: Vector3<f64>,
    /// Spatial velocity [ω; v_origin] in world coordinates.
    pub velocity: SpatialVec,
    /// World motion subspace column for this body's DOF, if any.
    pub subspace: Option<SpatialVec>,
}

/// Forward pass: world rotation, anchor position and spatial velocity per
/// body.
pub fn kinematics(character: &ArticulatedCharacter, state: &SimState) -> Vec<BodyFrame> {
    let bodies = character.bodies();
    let mut frames: Vec<BodyFrame> = Vec::with_capacity(bodies.len());
    let base = character.base_dofs();
    for body in bodies {
        let frame = match body.parent {
            None => {
                let rotation = state.root_rotation(character);
                let position = state.root_position(character);
                let velocity = if character.base() == BaseKind::Free {
                    spatial(
                        Vector3::new(state.qdot[0], state.qdot[1], state.qdot[2]),
                        Vector3::new(state.qdot[3], state.qdot[4], state.qdot[5]),
                    )
                } else {
                    SpatialVec::zeros()
                };
                BodyFrame {
                    rotation,
                    position,
                    velocity,
                    subspace: None,
                }
            }
            Some(p) => {
                let parent = &frames[p];
                let position = parent.position + parent.rotation * body.offset;
                match (body.axis, body.dof) {
                    (Some(axis), Some(d)) => {
                        let q = state.joint_angles(character)[d];
                        let qd = state.qdot[base + d];
                        let rotation = parent.rotation * axis_rotation(&axis, q);
                        let axis_world = parent.rotation * axis;
                        let s = revolute_subspace(&axis_world, &position);
                        let velocity = parent.velocity + s * qd;
                        BodyFrame {
                            rotation,
                            position,
                            velocity,
                            subspace: Some(s),
                        }
                    }
                    _ => BodyFrame {
                        rotation: parent.rotation,
                        position,
                        velocity: parent.velocity,
                        subspace: None,
                    },
                }
            }
        };
        frames.push(frame);
    }
    frames
}

/// World spatial inertia of each body at the current configuration.
pub fn world_inertias(character: &ArticulatedCharacter, frames: &[BodyFrame]) -> Vec<SpatialMat> {
    character
        .bodies()
        .iter()
        .zip(frames)
        .map(|(b, f)| {
            let com_world = f.position + f.rotation * b.com;
            let i_world = f.rotation * b.inertia * f.rotation.transpose();
            spatial_inertia(b.mass, &com_world, &i_world)
        })
        .collect()
}

/// Composite-rigid-body mass matrix.
pub fn mass_matrix(character: &ArticulatedCharacter, state: &SimState) -> DMatrix<f64> {
    let frames = kinematics(character, state);
    let bodies = character.bodies();
    let mut composite = world_inertias(character, &frames);
    for i in (0..bodies.len()).rev() {
        if let Some(p) = bodies[i].parent {
            let (head, tail) = composite.split_at_mut(i);
            head[p] += tail[0];
        }
    }

    let base = character.base_dofs();
    let nv = character.nv();
    let mut m = DMatrix::zeros(nv, nv);

    if character.base() == BaseKind::Free {
        m.view_mut((0, 0), (6, 6)).copy_from(&composite[0]);
    }
    for (i, body) in bodies.iter().enumerate() {
        let Some(d) = body.dof else { continue };
        let s_i = frames[i].subspace.expect("dof body has a subspace");
        let f = composite[i] * s_i;
        let ci = base + d;
        m[(ci, ci)] = s_i.dot(&f);
        // Transmit up the ancestor chain (no transforms in world coords).
        let mut j = body.parent;
        while let Some(jb) = j {
            if let Some(dj) = bodies[jb].dof {
                let s_j = frames[jb].subspace.unwrap();
                let cj = base + dj;
                let v = s_j.dot(&f);
                m[(cj, ci)] = v;
                m[(ci, cj)] = v;
            } else if bodies[jb].parent.is_none() && character.base() == BaseKind::Free {
                for r in 0..6 {
                    m[(r, ci)] = f[r];
                    m[(ci, r)] = f[r];
                }
            }
            j = bodies[jb].parent;
        }
    }
    m
}

/// Recursive Newton–Euler with zero acceleration: returns the generalized
/// force that gravity, velocity products and external forces demand, i.e.
/// the bias term h(q, q̇) − Jᵀf_ext in M·q̈ + h = τ.
pub fn bias_forces(
    character: &ArticulatedCharacter,
    state: &SimState,
    frames: &[BodyFrame],
    gravity: f64,
    external: &[SpatialVec],
) -> DVector<f64> {
    let bodies = character.bodies();
    let inertias = world_inertias(character, frames);
    let base = character.base_dofs();

    // Base acceleration trick: accelerate the world frame upward by g.
    let a0 = spatial(Vector3::zeros(), Vector3::new(0.0, gravity, 0.0));
    let mut accel: Vec<SpatialVec> = Vec::with_capacity(bodies.len());
    let mut force: Vec<SpatialVec> = Vec::with_capacity(bodies.len());
    for (i, body) in bodies.iter().enumerate() {
        let a = match body.parent {
            None => a0,
            Some(p) => {
                let mut a = accel[p];
                if let (Some(s), Some(d)) = (frames[i].subspace, body.dof) {
                    let qd = state.qdot[base + d];
                    a += cross_motion(&frames[i].velocity, &(s * qd));
                }
                a
            }
        };
        let v = frames[i].velocity;
        let momentum = inertias[i] * v;
        let mut f = inertias[i] * a + cross_force(&v, &momentum);
        f -= external[i];
        accel.push(a);
        force.push(f);
    }

    let mut bias = DVector::zeros(character.nv());
    for i in (0..bodies.len()).rev() {
        if let (Some(s), Some(d)) = (frames[i].subspace, bodies[i].dof) {
            bias[base + d] = s.dot(&force[i]);
        } else if bodies[i].parent.is_none() && character.base() == BaseKind::Free {
            for r in 0..6 {
                bias[r] = force[i][r];
            }
        }
        if let Some(p) = bodies[i].parent {
            let fi = force[i];
            force[p] += fi;
        }
    }
    bias
}

/// Total spatial momentum about the world origin (world coordinates).
pub fn total_momentum(character: &ArticulatedCharacter, state: &SimState) -> SpatialVec {
    let frames = kinematics(character, state);
    let inertias = world_inertias(character, &frames);
    let mut h = SpatialVec::zeros();
    for (inertia, frame) in inertias.iter().zip(&frames) {
        h += inertia * frame.velocity;
    }
    h
}

/// Kinetic energy ½ q̇ᵀ M q̇.
pub fn kinetic_energy(character: &ArticulatedCharacter, state: &SimState) -> f64 {
    let m = mass_matrix(character, state);
    let qd = DVector::from_column_slice(&state.qdot);
    0.5 * (qd.transpose() * &m * &qd)[(0, 0)]
}

/// Linear momentum (world) extracted from the spatial form.
pub fn linear_momentum(character: &ArticulatedCharacter, state: &SimState) -> Vector3<f64> {
    lin(&total_momentum(character, state))
}

/// Angular momentum about the world origin.
pub fn angular_momentum(character: &ArticulatedCharacter, state: &SimState) -> Vector3<f64> {
    ang(&total_momentum(character, state))
}
