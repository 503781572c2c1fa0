//! Physical oracles for the simulator: analytic ballistics, conservation
//! laws, static contact equilibrium, PD convergence and the FK cross-check.

use nalgebra::Vector3;
use std::sync::Arc;

use motion_core::{fk_poses, Joint, Pose, Skeleton};
use physics_sim::{
    angular_momentum, body_kinematics, kinetic_energy, linear_momentum, max_penetration,
    pd_torques, step, step_pd, ArticulatedCharacter, BaseKind, BuildOptions, Environment,
    JointDofs, SimState,
};

fn single_body() -> ArticulatedCharacter {
    let joints = vec![Joint::new("Body", None, Vector3::zeros())];
    let skel = Arc::new(Skeleton::with_extremities(joints, 1.0, [0, 0, 0, 0]).unwrap());
    ArticulatedCharacter::from_skeleton(skel, &[], &BuildOptions::default()).unwrap()
}

fn hinge_chain(n: usize, base: BaseKind) -> ArticulatedCharacter {
    let mut joints = vec![Joint::new("Base", None, Vector3::zeros())];
    for i in 1..=n {
        joints.push(Joint::new(
            format!("Link{i}"),
            Some(i - 1),
            if i == 1 {
                Vector3::zeros()
            } else {
                Vector3::new(0.0, -0.4, 0.0)
            },
        ));
    }
    let last = joints.len() - 1;
    let skel = Arc::new(Skeleton::with_extremities(joints, 1.0, [last; 4]).unwrap());
    let dofs: Vec<JointDofs> = (1..=n)
        .map(|i| JointDofs {
            joint: i,
            axes: vec![Vector3::x()],
        })
        .collect();
    let options = BuildOptions {
        base,
        ..BuildOptions::default()
    };
    ArticulatedCharacter::from_skeleton(skel, &dofs, &options).unwrap()
}

/// Zero gravity and the ground far below the rigs: pure articulated
/// dynamics with no contact.
fn no_gravity() -> Environment {
    Environment {
        gravity: 0.0,
        ground_height: -100.0,
        ..Environment::flat()
    }
}

#[test]
fn free_fall_matches_half_g_t_squared() {
    let c = single_body();
    let mut env = Environment::flat();
    env.ground_height = -100.0; // keep clear of contact
    let mut state = SimState::rest(&c);
    state.q[1] = 10.0;
    let y0 = state.q[1];
    let dt = 1.0 / 30.0;
    for _ in 0..30 {
        state = step(&state, &[], &c, &env, dt, 8).unwrap();
    }
    let t = 1.0;
    let expected = 0.5 * env.gravity * t * t;
    let dropped = y0 - state.q[1];
    let rel = (dropped - expected).abs() / expected;
    assert!(rel < 0.01, "dropped {dropped}, expected {expected} (rel {rel})");
}

#[test]
fn momentum_is_conserved_without_external_forces() {
    // Articulated chain tumbling in zero gravity with no contact and no
    // torque: world momentum must be conserved at every integration step.
    // Truncation drift is O(h²) per step, so each step() call here runs a
    // single substep to measure the per-step bound directly.
    let c = hinge_chain(2, BaseKind::Free);
    let env = no_gravity();
    let mut state = SimState::rest(&c);
    state.q[1] = 1.5; // modest height keeps momentum magnitudes O(1)
    state.set_root_velocity(&c, Vector3::new(0.1, 0.05, -0.075), Vector3::new(0.2, 0.15, 0.1));
    state.joint_rates_mut(&c)[0] = 0.4;
    state.joint_rates_mut(&c)[1] = -0.25;

    let h = 1.0 / 960.0;
    let torques = vec![0.0; c.dof_count()];
    for _ in 0..960 {
        let p0 = linear_momentum(&c, &state);
        let l0 = angular_momentum(&c, &state);
        let next = step(&state, &torques, &c, &env, h, 1).unwrap();
        let p1 = linear_momentum(&c, &next);
        let l1 = angular_momentum(&c, &next);
        assert!((p1 - p0).norm() < 1e-6, "linear {:?}", (p1 - p0).norm());
        assert!((l1 - l0).norm() < 1e-6, "angular {:?}", (l1 - l0).norm());
        state = next;
    }
}

#[test]
fn resting_body_settles_shallow_and_does_not_drift() {
    let c = single_body();
    let env = Environment::flat();
    let mut state = SimState::rest(&c);
    // Start just above the ground (capsule spans from origin downward).
    state.q[1] = 0.16;
    let x0 = state.q[0];
    let z0 = state.q[2];
    let dt = 1.0 / 30.0;
    for _ in 0..90 {
        state = step(&state, &[], &c, &env, dt, 8).unwrap();
    }
    let frames = physics_sim::body_frames(&state, &c);
    let pen = max_penetration(&c, &frames, &env);
    assert!(pen < 0.002, "resting penetration {pen} m");
    assert!((state.q[0] - x0).abs() < 1e-4, "lateral drift x");
    assert!((state.q[2] - z0).abs() < 1e-4, "lateral drift z");
    // And it is actually at rest.
    assert!(state.qdot.iter().all(|v| v.abs() < 0.01));
}

#[test]
fn double_pendulum_conserves_energy_without_gravity() {
    let c = hinge_chain(2, BaseKind::Fixed);
    let env = no_gravity();
    let mut state = SimState::rest(&c);
    state.joint_rates_mut(&c)[0] = 1.5;
    state.joint_rates_mut(&c)[1] = -1.0;
    let e0 = kinetic_energy(&c, &state);
    assert!(e0 > 0.0);
    let dt = 1.0 / 30.0;
    let torques = vec![0.0; 2];
    let mut worst = 0.0f64;
    for _ in 0..300 {
        state = step(&state, &torques, &c, &env, dt, 8).unwrap();
        let e = kinetic_energy(&c, &state);
        worst = worst.max((e - e0).abs() / e0);
    }
    assert!(worst < 0.01, "energy drift {worst} over 10 s");
}

#[test]
fn pd_converges_on_a_single_hinge() {
    let c = hinge_chain(1, BaseKind::Fixed);
    let env = no_gravity();
    let mut state = SimState::rest(&c);
    let target = vec![0.4];
    let dt = 1.0 / 30.0;
    for _ in 0..60 {
        state = step_pd(&state, &target, &c, &env, dt, 8).unwrap();
    }
    let err = (state.joint_angles(&c)[0] - 0.4).abs();
    assert!(err < 1e-3, "PD error after 2 s: {err}");
}

#[test]
fn pd_torque_formula_and_clamping() {
    let c = hinge_chain(1, BaseKind::Fixed);
    let mut state = SimState::rest(&c);
    let gains = c.pd_gains()[0];

    // a = q, qdot = 0 → zero torque.
    let tau = pd_torques(&state, &c, &[0.0]).unwrap();
    assert_eq!(tau[0], 0.0);

    // τ = kp·(a−q) − kd·q̇ below the limit.
    state.joint_rates_mut(&c)[0] = 0.1;
    let small = (0.5 * c.torque_limits()[0] + 0.1 * gains.kd) / gains.kp;
    let tau = pd_torques(&state, &c, &[small]).unwrap();
    let expect = gains.kp * small - gains.kd * 0.1;
    assert!((tau[0] - expect).abs() < 1e-12);

    // Saturation at the limit.
    let tau = pd_torques(&state, &c, &[1e6]).unwrap();
    assert_eq!(tau[0], c.torque_limits()[0]);

    // Wrong action length errors.
    assert!(pd_torques(&state, &c, &[0.0, 0.0]).is_err());
}

#[test]
fn step_is_deterministic() {
    let c = hinge_chain(2, BaseKind::Free);
    let env = Environment::flat();
    let mut state = SimState::rest(&c);
    state.q[1] = 0.5;
    state.joint_rates_mut(&c)[0] = 0.3;
    let torques = vec![0.05, -0.02];
    let a = step(&state, &torques, &c, &env, 1.0 / 30.0, 8).unwrap();
    let b = step(&state, &torques, &c, &env, 1.0 / 30.0, 8).unwrap();
    assert_eq!(a.q, b.q);
    assert_eq!(a.qdot, b.qdot);
}

#[test]
fn body_kinematics_matches_reference_fk() {
    // Random pose on a branched character, cross-checked against the
    // standalone FK implementation.
    let joints = vec![
        Joint::new("Hips", None, Vector3::zeros()),
        Joint::new("Spine", Some(0), Vector3::new(0.0, 0.3, 0.0)),
        Joint::new("LeftArm", Some(1), Vector3::new(0.25, 0.05, 0.0)),
        Joint::new("RightArm", Some(1), Vector3::new(-0.25, 0.05, 0.0)),
        Joint::new("LeftLeg", Some(0), Vector3::new(0.1, -0.1, 0.0)),
    ];
    let skel = Arc::new(Skeleton::with_extremities(joints, 1.0, [2, 3, 4, 4]).unwrap());
    let dofs = vec![
        JointDofs {
            joint: 1,
            axes: vec![Vector3::x(), Vector3::z()],
        },
        JointDofs {
            joint: 2,
            axes: vec![Vector3::y()],
        },
        JointDofs {
            joint: 3,
            axes: vec![Vector3::y(), Vector3::x(), Vector3::z()],
        },
        JointDofs {
            joint: 4,
            axes: vec![Vector3::x()],
        },
    ];
    let c = ArticulatedCharacter::from_skeleton(skel.clone(), &dofs, &BuildOptions::default())
        .unwrap();

    let mut state = SimState::rest(&c);
    state.set_root_pose(
        &c,
        Vector3::new(0.3, 1.2, -0.4),
        &nalgebra::Rotation3::from_euler_angles(0.2, 0.5, -0.1).into_inner(),
    );
    let angles = [0.4, -0.3, 0.7, 0.2, -0.5, 0.9, 0.33];
    state
        .joint_angles_mut(&c)
        .copy_from_slice(&angles);

    let kin = body_kinematics(&state, &c);

    // Reference: motion-core FK over joint-local rotations assembled from
    // the same angles.
    let rotations: Vec<_> = (0..skel.joint_count())
        .map(|j| {
            if j == skel.root_index() {
                state.root_rotation(&c)
            } else {
                c.joint_local_rotation(j, &angles)
            }
        })
        .collect();
    let pose = Pose {
        root_position: state.root_position(&c),
        rotations,
    };
    let fk = fk_poses(&[pose], &skel).unwrap();
    for j in 0..skel.joint_count() {
        let err = (kin.positions[j] - fk.position(0, j)).norm();
        assert!(err < 1e-8, "joint {j} position error {err}");
        let rot_err = (kin.rotations[j] - fk.rotation(0, j)).abs().max();
        assert!(rot_err < 1e-8, "joint {j} rotation error {rot_err}");
    }
}

#[test]
fn pure_root_translation_moves_all_joints_equally() {
    let c = hinge_chain(2, BaseKind::Free);
    let mut state = SimState::rest(&c);
    state.q[1] = 2.0;
    let v = Vector3::new(0.7, 0.0, -0.2);
    state.set_root_velocity(&c, v, Vector3::zeros());
    let kin = body_kinematics(&state, &c);
    for j in 0..c.skeleton().joint_count() {
        assert!((kin.lin_vel[j] - v).norm() < 1e-12, "joint {j}");
        assert!(kin.ang_vel[j].norm() < 1e-12);
    }
}

#[test]
fn divergence_is_reported() {
    let c = hinge_chain(1, BaseKind::Fixed);
    let env = no_gravity();
    let mut state = SimState::rest(&c);
    state.joint_rates_mut(&c)[0] = 150.0;
    // A huge constant torque blows past the velocity bound.
    let r = step(&state, &[1e7], &c, &env, 1.0, 4);
    assert!(matches!(r, Err(physics_sim::SimError::Diverged(_))));
}
