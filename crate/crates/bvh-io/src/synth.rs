//! Deterministic synthetic gait clips on a canonical toy skeleton.
//!
//! Desk-scale stand-in for a motion-capture corpus: parameterized walks,
//! squats and turns with sinusoidal limb swings.

use nalgebra::{Matrix3, Vector3};
use std::sync::Arc;

use motion_core::{extract_features, MotionClip, Pose, Skeleton};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use motion_core::Joint;

/// Canonical skeleton with `j` joints (8..=22). The core figure is a hip
/// root, spine, optional head, two arm chains ending in hands and two leg
/// chains ending in feet; any remaining budget extends the spine.
pub fn canonical_skeleton(j: usize) -> Arc<Skeleton> {
    assert!((8..=22).contains(&j), "joint count {j} outside 8..=22");
    let (arm_len, leg_len, head) = if j >= 13 { (2, 3, 1) } else { (1, 2, usize::from(j >= 9)) };
    let spine_len = j - (1 + head + 2 * arm_len + 2 * leg_len);
    assert!(spine_len >= 1);

    let hip_height = 0.9;
    let mut joints = vec![Joint::new("Hips", None, Vector3::zeros())];
    let mut spine_top = 0;
    for s in 0..spine_len {
        let name = if s == 0 {
            "Spine".to_string()
        } else {
            format!("Spine{}", s + 1)
        };
        joints.push(Joint::new(
            name,
            Some(spine_top),
            Vector3::new(0.0, 0.35 / spine_len as f64, 0.0),
        ));
        spine_top = joints.len() - 1;
    }
    if head == 1 {
        joints.push(Joint::new("Head", Some(spine_top), Vector3::new(0.0, 0.2, 0.0)));
    }
    for (side, sx) in [("Left", 1.0), ("Right", -1.0)] {
        let mut parent = spine_top;
        for a in 0..arm_len {
            let last = a == arm_len - 1;
            let name = if last {
                format!("{side}Hand")
            } else {
                format!("{side}Arm")
            };
            let offset = if a == 0 {
                Vector3::new(sx * 0.25, 0.1, 0.0)
            } else {
                Vector3::new(sx * 0.28, 0.0, 0.0)
            };
            joints.push(Joint::new(name, Some(parent), offset));
            parent = joints.len() - 1;
        }
    }
    for (side, sx) in [("Left", 1.0), ("Right", -1.0)] {
        let mut parent = 0;
        for l in 0..leg_len {
            let last = l == leg_len - 1;
            let name = if last {
                format!("{side}Foot")
            } else if l == 0 {
                format!("{side}UpLeg")
            } else {
                format!("{side}Leg")
            };
            let offset = match (l, leg_len) {
                (0, _) => Vector3::new(sx * 0.12, -0.08, 0.0),
                (1, 3) => Vector3::new(0.0, -0.42, 0.0),
                _ => Vector3::new(0.0, -0.38, 0.0),
            };
            joints.push(Joint::new(name, Some(parent), offset));
            parent = joints.len() - 1;
        }
    }
    debug_assert_eq!(joints.len(), j);
    Arc::new(Skeleton::new(joints, hip_height).expect("canonical skeleton is valid"))
}

/// Parameters of one generated gait clip.
#[derive(Debug, Clone)]
pub struct GaitParams {
    /// Forward speed in meters per second.
    pub speed: f64,
    /// Stride frequency in Hz.
    pub stride_hz: f64,
    /// Peak limb swing in radians.
    pub swing: f64,
    /// Heading turn rate in radians per second.
    pub turn_rate: f64,
    /// Vertical hip bob amplitude in meters.
    pub bob: f64,
    /// Squat depth as a fraction of hip height (0 disables).
    pub squat: f64,
}

impl GaitParams {
    /// A plain walk; swing and bob scale with speed so zero speed yields a
    /// perfectly static clip.
    pub fn walk(speed: f64) -> Self {
        let gain = (speed / 0.6).min(1.0);
        GaitParams {
            speed,
            stride_hz: 1.4,
            swing: 0.5 * gain,
            turn_rate: 0.0,
            bob: 0.02 * gain,
            squat: 0.0,
        }
    }
}

/// Generate one clip of `frames` frames at `fps` on `skeleton`.
///
/// Limb swings are sinusoidal at the stride frequency with opposite phase
/// on opposite sides; the root advances along the (possibly turning)
/// heading.
pub fn synth_clip(
    skeleton: &Arc<Skeleton>,
    params: &GaitParams,
    frames: usize,
    fps: f64,
    phase0: f64,
) -> MotionClip {
    assert!(frames >= 2, "need at least 2 frames");
    let hip = skeleton.hip_height();
    let two_pi = std::f64::consts::TAU;
    let mut poses = Vec::with_capacity(frames);
    let mut heading = 0.0f64;
    let mut pos = Vector3::new(0.0, hip, 0.0);
    for f in 0..frames {
        let t = f as f64 / fps;
        let phase = two_pi * params.stride_hz * t + phase0;
        let squat_drop = params.squat * hip * 0.5 * (1.0 - (two_pi * 0.5 * t).cos());
        pos.y = hip - squat_drop + params.bob * (2.0 * phase).sin();

        let mut rotations = vec![Matrix3::identity(); skeleton.joint_count()];
        rotations[skeleton.root_index()] = rot_y(heading);
        for (ji, joint) in skeleton.joints().iter().enumerate() {
            let name = joint.name.as_str();
            let side = if name.starts_with("Left") {
                1.0
            } else if name.starts_with("Right") {
                -1.0
            } else {
                0.0
            };
            if side != 0.0 {
                let is_arm = name.contains("Arm") || name.contains("Hand");
                let sign = if is_arm { -side } else { side };
                let mut angle = params.swing * (phase + if sign > 0.0 { 0.0 } else { std::f64::consts::PI }).sin();
                if name.contains("Foot") || name.contains("Leg") && !name.contains("UpLeg") {
                    // Distal segments flex with half amplitude, phase-shifted.
                    angle = 0.5 * params.swing * (phase + std::f64::consts::FRAC_PI_2).sin();
                }
                if params.squat > 0.0 && !is_arm {
                    angle += params.squat * 0.8 * (1.0 - (two_pi * 0.5 * t).cos()) * 0.5;
                }
                rotations[ji] = rot_x(angle);
            } else if name.starts_with("Spine") {
                rotations[ji] = rot_x(0.1 * params.swing * (2.0 * phase).sin());
            }
        }

        poses.push(Pose {
            root_position: pos,
            rotations: rotations.clone(),
        });

        // Advance root along heading for the next frame.
        let step = params.speed / fps;
        pos.x += heading.sin() * step;
        pos.z += heading.cos() * step;
        heading += params.turn_rate / fps;
    }
    extract_features(&poses, skeleton, fps).expect("synth poses are valid")
}

/// Configuration for [`synth_dataset`].
#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub n_clips: usize,
    pub frames: usize,
    pub fps: f64,
    pub joint_count: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_clips: 20,
            frames: 60,
            fps: 30.0,
            joint_count: 8,
        }
    }
}

/// Deterministic dataset of parameterized gait clips: walks with varying
/// speed, turning walks and squat variants.
pub fn synth_dataset(spec: &SynthSpec, seed: u64) -> Vec<MotionClip> {
    assert!(spec.frames >= 2);
    let skeleton = canonical_skeleton(spec.joint_count);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..spec.n_clips)
        .map(|i| {
            let speed = rng.random_range(0.2..1.2);
            let mut params = GaitParams::walk(speed);
            params.stride_hz = rng.random_range(0.9..1.9);
            params.swing = rng.random_range(0.25..0.6);
            params.bob = rng.random_range(0.005..0.03);
            match i % 3 {
                1 => params.turn_rate = rng.random_range(-0.8..0.8),
                2 => {
                    params.squat = rng.random_range(0.1..0.3);
                    params.speed *= 0.3;
                }
                _ => {}
            }
            let phase0 = rng.random_range(0.0..std::f64::consts::TAU);
            synth_clip(&skeleton, &params, spec.frames, spec.fps, phase0)
        })
        .collect()
}

fn rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

fn rot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}
