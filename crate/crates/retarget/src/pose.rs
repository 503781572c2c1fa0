//! Pose transfer: mapped joints receive the source's global rotations,
//! unmapped joints keep their rest rotation, the root position scales with
//! the hip-height ratio.

use nalgebra::Matrix3;

use motion_core::{fk_poses, FrameFeature, FrameLayout, Pose, Rot6D, Skeleton};

use crate::mapping::JointMapping;
use crate::RetargetError;

/// Global rotations of every joint of a pose.
pub(crate) fn global_rotations(pose: &Pose, skel: &Skeleton) -> Vec<Matrix3<f64>> {
    let mut glob = vec![Matrix3::identity(); skel.joint_count()];
    for (j, joint) in skel.joints().iter().enumerate() {
        glob[j] = match joint.parent {
            None => pose.rotations[j],
            Some(p) => glob[p] * pose.rotations[j],
        };
    }
    glob
}

/// Retarget one pose from `src` onto `dst`.
pub fn retarget_pose(
    pose: &Pose,
    mapping: &JointMapping,
    src: &Skeleton,
    dst: &Skeleton,
) -> Result<Pose, RetargetError> {
    mapping.check(src, dst)?;
    if pose.rotations.len() != src.joint_count() {
        return Err(RetargetError::MappingMismatch(format!(
            "pose has {} rotations for a {}-joint skeleton",
            pose.rotations.len(),
            src.joint_count()
        )));
    }
    let src_glob = global_rotations(pose, src);
    let ratio = dst.hip_height() / src.hip_height();

    let mut locals = vec![Matrix3::identity(); dst.joint_count()];
    let mut glob = vec![Matrix3::identity(); dst.joint_count()];
    for (j, joint) in dst.joints().iter().enumerate() {
        let parent_glob = joint.parent.map(|p| glob[p]).unwrap_or_else(Matrix3::identity);
        match mapping.source_of(j) {
            Some(s) => {
                glob[j] = src_glob[s];
                locals[j] = parent_glob.transpose() * src_glob[s];
            }
            None => {
                locals[j] = Matrix3::identity();
                glob[j] = parent_glob;
            }
        }
    }
    Ok(Pose {
        root_position: pose.root_position * ratio,
        rotations: locals,
    })
}

/// A keyframe: its index in the target window plus the pose at that frame.
#[derive(Debug, Clone)]
pub struct KeyframePose {
    pub index: usize,
    pub pose: Pose,
}

/// Retarget sparse keyframes onto the canonical skeleton and encode them as
/// feature rows.
///
/// Velocity channels use differences of temporally adjacent keyframes where
/// available (index distance 1); isolated keyframes get zero velocities and
/// leave dynamics to the generator.
pub fn retarget_keyframes(
    keyframes: &[KeyframePose],
    mapping: &JointMapping,
    src: &Skeleton,
    canonical: &Skeleton,
) -> Result<Vec<(usize, Vec<f64>)>, RetargetError> {
    let layout = FrameLayout::new(canonical.joint_count());
    let retargeted: Vec<(usize, Pose)> = keyframes
        .iter()
        .map(|kf| Ok((kf.index, retarget_pose(&kf.pose, mapping, src, canonical)?)))
        .collect::<Result<_, RetargetError>>()?;

    let mut rows = Vec::with_capacity(retargeted.len());
    for (i, (index, pose)) in retargeted.iter().enumerate() {
        let prev = i
            .checked_sub(1)
            .map(|p| &retargeted[p])
            .filter(|(pidx, _)| pidx + 1 == *index);
        let rotations = pose
            .rotations
            .iter()
            .map(Rot6D::from_matrix)
            .collect::<Result<Vec<_>, _>>()?;
        let mut feat = FrameFeature {
            rotations,
            vx: 0.0,
            py: pose.root_position.y,
            vz: 0.0,
            root_angvel: [0.0; 6],
            extremity_vel: [nalgebra::Vector3::zeros(); 4],
        };
        if let Some((_, prev_pose)) = prev {
            let dp = pose.root_position - prev_pose.root_position;
            feat.vx = dp.x;
            feat.vz = dp.z;
            let cur = Rot6D::from_matrix(&pose.rotations[canonical.root_index()])?.to_array();
            let was = Rot6D::from_matrix(&prev_pose.rotations[canonical.root_index()])?.to_array();
            for (w, (a, b)) in feat.root_angvel.iter_mut().zip(cur.iter().zip(&was)) {
                *w = a - b;
            }
            let fk = fk_poses(
                &[prev_pose.clone(), pose.clone()],
                canonical,
            )?;
            for (k, &joint) in canonical.extremities().iter().enumerate() {
                feat.extremity_vel[k] = fk.position(1, joint) - fk.position(0, joint);
            }
        }
        rows.push((*index, feat.to_row(layout)));
    }
    Ok(rows)
}
