//! Time stepping: PD torques, substepped semi-implicit Euler, body
//! kinematics queries.

use nalgebra::{DVector, Matrix3, UnitQuaternion, Vector3};

use crate::character::{ArticulatedCharacter, BaseKind};
use crate::contact::{contact_forces, Environment};
use crate::dynamics::{bias_forces, kinematics, mass_matrix, BodyFrame};
use crate::error::SimError;
use crate::spatial::{ang, point_velocity};
use crate::state::SimState;

/// Substeps per control step.
pub const DEFAULT_SUBSTEPS: usize = 8;

/// Episode-abort velocity bound (rad/s or m/s on any coordinate).
pub const VELOCITY_BOUND: f64 = 200.0;

/// PD torques: τ = kp·(a − q) − kd·q̇, clamped to the per-DOF limits.
pub fn pd_torques(
    state: &SimState,
    character: &ArticulatedCharacter,
    targets: &[f64],
) -> Result<Vec<f64>, SimError> {
    if targets.len() != character.dof_count() {
        return Err(SimError::DimensionMismatch {
            expected: character.dof_count(),
            got: targets.len(),
        });
    }
    let q = state.joint_angles(character);
    let qd = state.joint_rates(character);
    Ok(character
        .pd_gains()
        .iter()
        .zip(character.torque_limits())
        .enumerate()
        .map(|(i, (g, &limit))| {
            let tau = g.kp * (targets[i] - q[i]) - g.kd * qd[i];
            tau.clamp(-limit, limit)
        })
        .collect())
}

/// Advance one control step of `dt` seconds under fixed joint torques,
/// integrating `substeps` semi-implicit Euler substeps with penalty
/// contacts.
pub fn step(
    state: &SimState,
    torques: &[f64],
    character: &ArticulatedCharacter,
    env: &Environment,
    dt: f64,
    substeps: usize,
) -> Result<SimState, SimError> {
    step_with(state, character, env, dt, substeps, |_| Ok(torques.to_vec()))
}

/// Advance one control step, recomputing PD torques for a fixed target at
/// every substep (the form the tracking controller uses).
pub fn step_pd(
    state: &SimState,
    targets: &[f64],
    character: &ArticulatedCharacter,
    env: &Environment,
    dt: f64,
    substeps: usize,
) -> Result<SimState, SimError> {
    step_with(state, character, env, dt, substeps, |s| {
        pd_torques(s, character, targets)
    })
}

fn step_with(
    state: &SimState,
    character: &ArticulatedCharacter,
    env: &Environment,
    dt: f64,
    substeps: usize,
    torque_fn: impl Fn(&SimState) -> Result<Vec<f64>, SimError>,
) -> Result<SimState, SimError> {
    assert!(dt > 0.0 && substeps > 0);
    let h = dt / substeps as f64;
    let base = character.base_dofs();
    let nv = character.nv();
    let mut cur = state.clone();
    let mut contacts = vec![false; character.bodies().len()];

    for _ in 0..substeps {
        let torques = torque_fn(&cur)?;
        if torques.len() != character.dof_count() {
            return Err(SimError::DimensionMismatch {
                expected: character.dof_count(),
                got: torques.len(),
            });
        }
        let frames = kinematics(character, &cur);
        let (f_ext, points) = contact_forces(character, &frames, env, h);
        for flag in contacts.iter_mut() {
            *flag = false;
        }
        for p in &points {
            contacts[p.body] = true;
        }

        let bias = bias_forces(character, &cur, &frames, env.gravity, &f_ext);
        let m = mass_matrix(character, &cur);
        let mut rhs = DVector::zeros(nv);
        for (d, tau) in torques.iter().enumerate() {
            rhs[base + d] = *tau;
        }
        rhs -= bias;
        let qdd = m
            .cholesky()
            .ok_or_else(|| SimError::Diverged("mass matrix not positive definite".into()))?
            .solve(&rhs);

        for (v, a) in cur.qdot.iter_mut().zip(qdd.iter()) {
            *v += a * h;
        }
        integrate_positions(character, &mut cur, h)?;
        cur.time += h;

        if cur.qdot.iter().any(|v| v.abs() > VELOCITY_BOUND) || !cur.is_finite() {
            return Err(SimError::Diverged(format!(
                "velocity bound exceeded at t={:.3}",
                cur.time
            )));
        }
    }
    cur.contacts = contacts;
    Ok(cur)
}

fn integrate_positions(
    character: &ArticulatedCharacter,
    state: &mut SimState,
    h: f64,
) -> Result<(), SimError> {
    if character.base() == BaseKind::Free {
        let w = Vector3::new(state.qdot[0], state.qdot[1], state.qdot[2]);
        let vo = Vector3::new(state.qdot[3], state.qdot[4], state.qdot[5]);
        let p = Vector3::new(state.q[0], state.q[1], state.q[2]);
        let pdot = vo + w.cross(&p);
        state.q[0] += pdot.x * h;
        state.q[1] += pdot.y * h;
        state.q[2] += pdot.z * h;

        let quat = state.root_quaternion(character);
        let dq = UnitQuaternion::from_scaled_axis(w * h);
        let next = dq * quat;
        state.q[3] = next.w;
        state.q[4] = next.i;
        state.q[5] = next.j;
        state.q[6] = next.k;
    }
    let base = character.base_dofs();
    let rates: Vec<f64> = state.qdot[base..].to_vec();
    for (q, qd) in state.joint_angles_mut(character).iter_mut().zip(rates) {
        *q += qd * h;
    }
    Ok(())
}

/// Global kinematics per skeleton joint.
#[derive(Debug, Clone)]
pub struct JointKinematics {
    pub positions: Vec<Vector3<f64>>,
    pub rotations: Vec<Matrix3<f64>>,
    pub lin_vel: Vec<Vector3<f64>>,
    pub ang_vel: Vec<Vector3<f64>>,
}

/// World position, rotation and velocities of every skeleton joint.
pub fn body_kinematics(state: &SimState, character: &ArticulatedCharacter) -> JointKinematics {
    let frames = kinematics(character, state);
    let nj = character.skeleton().joint_count();
    let mut out = JointKinematics {
        positions: Vec::with_capacity(nj),
        rotations: Vec::with_capacity(nj),
        lin_vel: Vec::with_capacity(nj),
        ang_vel: Vec::with_capacity(nj),
    };
    for j in 0..nj {
        let b = character.body_of_joint(j);
        let f = &frames[b];
        out.positions.push(f.position);
        out.rotations.push(f.rotation);
        out.lin_vel.push(point_velocity(&f.velocity, &f.position));
        out.ang_vel.push(ang(&f.velocity));
    }
    out
}

/// Raw body frames (for contact queries and diagnostics).
pub fn body_frames(state: &SimState, character: &ArticulatedCharacter) -> Vec<BodyFrame> {
    kinematics(character, state)
}

/// Velocity of the root anchor (convenience mirror of the state helper).
pub fn root_velocity(state: &SimState, character: &ArticulatedCharacter) -> Vector3<f64> {
    match character.base() {
        BaseKind::Free => {
            let frames = kinematics(character, state);
            let root = character.body_of_joint(character.skeleton().root_index());
            point_velocity(&frames[root].velocity, &frames[root].position)
        }
        BaseKind::Fixed => Vector3::zeros(),
    }
}
