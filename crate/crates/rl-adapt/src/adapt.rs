//! Auto-regressive inference (mean actions) producing the adapted clip, and
//! the keyframe-error redistribution pass for iterative refinement.

use nalgebra::Vector3;
use std::sync::Arc;

use motion_core::{extract_features, poses_from_clip, MotionClip, Pose};
use physics_sim::{
    body_frames, body_kinematics, ArticulatedCharacter, Environment,
};
use retarget::{reference_features, JointMapping};

use crate::env::{EarlyTermination, TrackingEnv};
use crate::error::RlError;
use crate::policy::Policy;
use crate::reference::ReferenceTrack;
use crate::reward::RewardWeights;

/// Outcome of an adaptation rollout.
#[derive(Debug, Clone)]
pub struct AdaptResult {
    pub clip: MotionClip,
    pub mean_reward: f64,
    /// Worst ground penetration of contact-permitted bodies over the whole
    /// rollout (m).
    pub max_foot_penetration: f64,
}

/// Track a canonical clip on the character with deterministic (mean)
/// actions becoming the output motion.
pub fn adapt_motion(
    policy: &Policy,
    character: &Arc<ArticulatedCharacter>,
    world: &Environment,
    canonical: &MotionClip,
    mapping: &JointMapping,
) -> Result<AdaptResult, RlError> {
    adapt_motion_with(
        |_, obs| policy.act_mean(obs),
        character,
        world,
        canonical,
        mapping,
    )
}

/// Generic adaptation driver: `controller(frame, obs)` supplies the PD
/// targets for each control step.
pub fn adapt_motion_with(
    mut controller: impl FnMut(usize, &[f64]) -> Result<Vec<f64>, RlError>,
    character: &Arc<ArticulatedCharacter>,
    world: &Environment,
    canonical: &MotionClip,
    mapping: &JointMapping,
) -> Result<AdaptResult, RlError> {
    let motion = reference_features(canonical, mapping, character.skeleton())?;
    let track = Arc::new(ReferenceTrack::from_reference_motion(character, &motion)?);
    let mapped: Vec<usize> = mapping.pairs().iter().map(|&(_, d)| d).collect();
    let mut env = TrackingEnv::new(
        character.clone(),
        world.clone(),
        track.clone(),
        mapped,
        RewardWeights::default(),
        EarlyTermination::default(),
    )?;

    let skeleton = character.skeleton().clone();
    let mut poses = Vec::with_capacity(track.len());
    let mut reward_sum = 0.0;
    let mut max_pen = 0.0f64;
    let record = |env: &TrackingEnv, poses: &mut Vec<Pose>, max_pen: &mut f64| {
        let state = env.state();
        let kin = body_kinematics(state, character);
        let angles = state.joint_angles(character);
        let rotations = (0..skeleton.joint_count())
            .map(|j| {
                if j == skeleton.root_index() {
                    state.root_rotation(character)
                } else {
                    character.joint_local_rotation(j, angles)
                }
            })
            .collect();
        poses.push(Pose {
            root_position: kin.positions[skeleton.root_index()],
            rotations,
        });
        let frames = body_frames(state, character);
        *max_pen = max_pen.max(foot_penetration(character, &frames, env.world()));
    };

    record(&env, &mut poses, &mut max_pen);
    for frame in 1..track.len() {
        let obs = env.observe()?;
        let action = controller(frame - 1, &obs.data)?;
        let outcome = env.step(&action)?;
        if outcome.terminated {
            return Err(RlError::SimDiverged {
                frame,
                msg: "tracking terminated early during adaptation".into(),
            });
        }
        reward_sum += outcome.reward.total;
        record(&env, &mut poses, &mut max_pen);
    }

    let mut clip = extract_features(&poses, &skeleton, canonical.fps())?;
    clip = clip.with_keyframes(canonical.keyframe_indices().to_vec())?;
    Ok(AdaptResult {
        clip,
        mean_reward: reward_sum / (track.len() - 1) as f64,
        max_foot_penetration: max_pen,
    })
}

fn foot_penetration(
    character: &ArticulatedCharacter,
    frames: &[physics_sim::BodyFrame],
    env: &Environment,
) -> f64 {
    let depths = physics_sim::body_penetrations(character, frames, env);
    character
        .bodies()
        .iter()
        .zip(depths)
        .filter(|(b, _)| b.contact_allowed)
        .map(|(_, d)| d)
        .fold(0.0, f64::max)
}

/// Expected root positions at the keyframes, on the character (hip-scaled),
/// expressed in the same frame-0-origin convention as the adapted clip.
pub fn reference_root_targets(
    canonical: &MotionClip,
    mapping: &JointMapping,
    character: &ArticulatedCharacter,
) -> Result<Vec<(usize, Vector3<f64>)>, RlError> {
    let motion = reference_features(canonical, mapping, character.skeleton())?;
    let root = character.skeleton().root_index();
    Ok(canonical
        .keyframe_indices()
        .iter()
        .map(|&k| (k, motion.frames[k].positions[root]))
        .collect())
}

/// Linearly blend the root-position error at each keyframe to zero over the
/// `window` frames preceding it: frame k−j receives e·(window−j)/window.
/// The corrected clip is meant to seed another adaptation pass.
pub fn redistribute_keyframe_error(
    adapted: &MotionClip,
    targets: &[(usize, Vector3<f64>)],
    window: usize,
) -> Result<MotionClip, RlError> {
    assert!(window >= 1, "window must be at least 1");
    let mut poses = poses_from_clip(adapted)?;
    let mut offsets = vec![Vector3::zeros(); poses.len()];
    for &(k, target) in targets {
        if k >= poses.len() {
            return Err(RlError::LengthMismatch(format!(
                "keyframe {k} outside clip of length {}",
                poses.len()
            )));
        }
        let error = target - poses[k].root_position;
        for j in 0..window.min(k + 1) {
            offsets[k - j] += error * ((window - j) as f64 / window as f64);
        }
    }
    for (pose, off) in poses.iter_mut().zip(&offsets) {
        pose.root_position += off;
    }
    let clip = extract_features(&poses, adapted.skeleton(), adapted.fps())?;
    Ok(clip.with_keyframes(adapted.keyframe_indices().to_vec())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use bvh_io::{canonical_skeleton, synth_clip, GaitParams};
    use motion_core::forward_kinematics;

    #[test]
    fn zero_error_redistribution_is_identity() {
        let skel = canonical_skeleton(8);
        let clip = synth_clip(&skel, &GaitParams::walk(0.6), 20, 30.0, 0.0)
            .with_keyframes(vec![0, 10, 19])
            .unwrap();
        let fk = forward_kinematics(&clip).unwrap();
        let root = skel.root_index();
        let targets: Vec<(usize, Vector3<f64>)> = clip
            .keyframe_indices()
            .iter()
            .map(|&k| (k, fk.position(k, root)))
            .collect();
        let out = redistribute_keyframe_error(&clip, &targets, 5).unwrap();
        let max_err = clip
            .data()
            .iter()
            .zip(out.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(max_err < 1e-9, "clip changed by {max_err}");
    }

    #[test]
    fn single_keyframe_error_ramps_linearly() {
        let skel = canonical_skeleton(8);
        let clip = synth_clip(&skel, &GaitParams::walk(0.0), 20, 30.0, 0.0)
            .with_keyframes(vec![15])
            .unwrap();
        let fk = forward_kinematics(&clip).unwrap();
        let root = skel.root_index();
        let e = Vector3::new(0.3, 0.0, -0.1);
        let w = 6usize;
        let targets = vec![(15usize, fk.position(15, root) + e)];
        let out = redistribute_keyframe_error(&clip, &targets, w).unwrap();
        let fk_out = forward_kinematics(&out).unwrap();
        for j in 0..w {
            let frame = 15 - j;
            let expected = e * ((w - j) as f64 / w as f64);
            let moved = fk_out.position(frame, root) - fk.position(frame, root);
            assert!(
                (moved - expected).norm() < 1e-9,
                "frame {frame}: moved {moved:?}, expected {expected:?}"
            );
        }
        // Frames before the window are untouched.
        let before = 15 - w;
        assert!((fk_out.position(before, root) - fk.position(before, root)).norm() < 1e-9);
    }
}
