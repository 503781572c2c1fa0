//! Conversion between parsed BVH documents and feature clips.

use nalgebra::{Matrix3, Vector3};

use motion_core::{extract_features, poses_from_clip, MotionClip, Pose};

use crate::error::BvhError;
use crate::euler::{euler_to_matrix, matrix_to_euler_zyx};
use crate::parse::{BvhDocument, Channel};

/// Decode a document into a feature clip. Rotations are converted from
/// degrees in declared channel order; position channels are honored on the
/// root only (see [`BvhDocument::warnings`]).
pub fn bvh_to_clip(doc: &BvhDocument) -> Result<MotionClip, BvhError> {
    let skeleton = &doc.skeleton;
    let root = skeleton.root_index();
    let mut poses = Vec::with_capacity(doc.n_frames);
    for f in 0..doc.n_frames {
        let row = doc.frame(f);
        let mut col = 0usize;
        let mut rotations = vec![Matrix3::identity(); skeleton.joint_count()];
        let mut root_position = skeleton.joints()[root].offset;
        for (j, chans) in doc.channel_order.iter().enumerate() {
            let mut order = Vec::with_capacity(3);
            let mut radians = Vec::with_capacity(3);
            for c in chans {
                let v = row[col];
                col += 1;
                match c {
                    Channel::Xposition if j == root => root_position.x += v,
                    Channel::Yposition if j == root => root_position.y += v,
                    Channel::Zposition if j == root => root_position.z += v,
                    Channel::Xposition | Channel::Yposition | Channel::Zposition => {}
                    rot => {
                        order.push(*rot);
                        radians.push(v.to_radians());
                    }
                }
            }
            rotations[j] = euler_to_matrix(&order, &radians);
        }
        poses.push(Pose {
            root_position,
            rotations,
        });
    }
    let fps = 1.0 / doc.frame_time;
    Ok(extract_features(&poses, skeleton, fps)?)
}

/// Encode a clip as a BVH document with the canonical channel layout.
pub fn clip_to_bvh(clip: &MotionClip) -> Result<BvhDocument, BvhError> {
    let skeleton = clip.skeleton().clone();
    let root = skeleton.root_index();
    let poses = poses_from_clip(clip)?;

    let mut channel_order = vec![
        vec![
            Channel::Zrotation,
            Channel::Yrotation,
            Channel::Xrotation,
        ];
        skeleton.joint_count()
    ];
    channel_order[root] = vec![
        Channel::Xposition,
        Channel::Yposition,
        Channel::Zposition,
        Channel::Zrotation,
        Channel::Yrotation,
        Channel::Xrotation,
    ];
    let n_channels: usize = channel_order.iter().map(|c| c.len()).sum();
    let root_offset: Vector3<f64> = skeleton.joints()[root].offset;

    let mut frames = Vec::with_capacity(poses.len() * n_channels);
    for pose in &poses {
        for (j, chans) in channel_order.iter().enumerate() {
            if j == root {
                let p = pose.root_position - root_offset;
                frames.extend_from_slice(&[p.x, p.y, p.z]);
            }
            let zyx = matrix_to_euler_zyx(&pose.rotations[j]);
            debug_assert!(chans.iter().filter(|c| c.is_rotation()).count() == 3);
            frames.extend(zyx.iter().map(|r| r.to_degrees()));
        }
    }
    Ok(BvhDocument {
        skeleton,
        channel_order,
        frames,
        n_frames: poses.len(),
        n_channels,
        frame_time: 1.0 / clip.fps(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_bvh;
    use crate::write::write_bvh;
    use motion_core::forward_kinematics;

    fn fixture_two_joints(order: &str, frame_rows: &[&str]) -> String {
        format!(
            "HIERARCHY\n\
             ROOT Hips\n{{\n\
             \x20 OFFSET 0 1 0\n\
             \x20 CHANNELS 6 Xposition Yposition Zposition {order}\n\
             \x20 JOINT Child\n\x20 {{\n\
             \x20   OFFSET 0 -0.5 0\n\
             \x20   CHANNELS 3 {order}\n\
             \x20   End Site\n\x20   {{\n\x20     OFFSET 0 -0.2 0\n\x20   }}\n\
             \x20 }}\n\
             }}\n\
             MOTION\nFrames: {}\nFrame Time: 0.0333333333\n{}\n",
            frame_rows.len(),
            frame_rows.join("\n")
        )
    }

    #[test]
    fn zyx_ninety_degrees_becomes_z_rotation() {
        let text = fixture_two_joints(
            "Zrotation Yrotation Xrotation",
            &["0 0 0 90 0 0 0 0 0", "0 0 0 90 0 0 0 0 0"],
        );
        let doc = parse_bvh(&text).unwrap();
        let clip = bvh_to_clip(&doc).unwrap();
        let layout = clip.layout();
        let row = clip.row(0);
        let r6 = &row[layout.rot_col(0)..layout.rot_col(0) + 6];
        // Oracle: 90 degrees about z has columns (0,1,0) and (-1,0,0).
        let expected = [0.0, 1.0, 0.0, -1.0, 0.0, 0.0];
        for (a, b) in r6.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-9, "{r6:?}");
        }
    }

    #[test]
    fn static_fixture_has_zero_velocities() {
        let text = fixture_two_joints(
            "Zrotation Yrotation Xrotation",
            &["0 0 0 10 20 30 5 5 5", "0 0 0 10 20 30 5 5 5"],
        );
        let clip = bvh_to_clip(&parse_bvh(&text).unwrap()).unwrap();
        let layout = clip.layout();
        for f in 0..clip.len() {
            let row = clip.row(f);
            assert_eq!(row[layout.vx_col()], 0.0);
            assert_eq!(row[layout.vz_col()], 0.0);
            assert!(row[layout.u_block()].iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn round_trip_preserves_fk_positions() {
        let text = fixture_two_joints(
            "Zrotation Yrotation Xrotation",
            &[
                "0.0 0.0 0.0 10 5 -3 20 0 10",
                "0.1 0.02 0.0 12 6 -2 22 1 11",
                "0.2 0.04 0.1 14 8 -1 25 2 12",
                "0.3 0.05 0.2 15 9 0 28 3 14",
            ],
        );
        let clip = bvh_to_clip(&parse_bvh(&text).unwrap()).unwrap();
        let doc2 = clip_to_bvh(&clip).unwrap();
        let reparsed = parse_bvh(&write_bvh(&doc2)).unwrap();
        let clip2 = bvh_to_clip(&reparsed).unwrap();

        let fk1 = forward_kinematics(&clip).unwrap();
        let fk2 = forward_kinematics(&clip2).unwrap();
        for (a, b) in fk1.positions().iter().zip(fk2.positions()) {
            assert!((a - b).norm() < 1e-4, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn empty_motion_is_too_short() {
        let text = fixture_two_joints("Zrotation Yrotation Xrotation", &[]);
        let doc = parse_bvh(&text).unwrap();
        assert!(matches!(
            bvh_to_clip(&doc),
            Err(BvhError::Motion(motion_core::MotionError::TooShort(0)))
        ));
    }

    #[test]
    fn channel_reordering_preserves_fk() {
        use crate::euler::{euler_to_matrix, matrix_to_euler_xyz};
        use crate::parse::Channel::*;

        // Same motion expressed in ZYX and XYZ channel orders.
        let zyx_angles = [[30.0f64, 20.0, 10.0], [40.0, 10.0, -5.0], [35.0, 15.0, 0.0]];
        let mut zyx_rows = Vec::new();
        let mut xyz_rows = Vec::new();
        for a in &zyx_angles {
            let rad: Vec<f64> = a.iter().map(|d| d.to_radians()).collect();
            let m = euler_to_matrix(&[Zrotation, Yrotation, Xrotation], &rad);
            let xyz = matrix_to_euler_xyz(&m);
            zyx_rows.push(format!(
                "0 0 0 {} {} {} {} {} {}",
                a[0], a[1], a[2], a[0], a[1], a[2]
            ));
            xyz_rows.push(format!(
                "0 0 0 {} {} {} {} {} {}",
                xyz[0].to_degrees(),
                xyz[1].to_degrees(),
                xyz[2].to_degrees(),
                xyz[0].to_degrees(),
                xyz[1].to_degrees(),
                xyz[2].to_degrees()
            ));
        }
        let zyx_refs: Vec<&str> = zyx_rows.iter().map(|s| s.as_str()).collect();
        let xyz_refs: Vec<&str> = xyz_rows.iter().map(|s| s.as_str()).collect();
        let doc_a = parse_bvh(&fixture_two_joints("Zrotation Yrotation Xrotation", &zyx_refs)).unwrap();
        let doc_b = parse_bvh(&fixture_two_joints("Xrotation Yrotation Zrotation", &xyz_refs)).unwrap();
        let fk_a = forward_kinematics(&bvh_to_clip(&doc_a).unwrap()).unwrap();
        let fk_b = forward_kinematics(&bvh_to_clip(&doc_b).unwrap()).unwrap();
        for (a, b) in fk_a.positions().iter().zip(fk_b.positions()) {
            assert!((a - b).norm() < 1e-5);
        }
    }
}
