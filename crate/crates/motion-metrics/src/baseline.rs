//! The interpolation baseline: slerp on joint rotations between the
//! surrounding keyframes, linear interpolation on every other channel.

use nalgebra::UnitQuaternion;
use std::sync::Arc;

use motion_core::{FrameLayout, MotionClip, Rot6D, Skeleton};

use crate::MetricsError;

/// Fill an N-frame clip from keyframe feature rows. The keyframes must
/// include both endpoints; output rows at keyframes equal the inputs
/// exactly.
pub fn interpolation_baseline(
    keyframes: &[Vec<f64>],
    indices: &[usize],
    n: usize,
    skeleton: &Arc<Skeleton>,
    fps: f64,
) -> Result<MotionClip, MetricsError> {
    if keyframes.len() < 2
        || indices.len() != keyframes.len()
        || indices.first() != Some(&0)
        || indices.last() != Some(&(n - 1))
    {
        return Err(MetricsError::NeedTwoKeyframes);
    }
    let layout = FrameLayout::new(skeleton.joint_count());
    let d = layout.dim();
    for row in keyframes {
        if row.len() != d {
            return Err(MetricsError::DimensionMismatch {
                expected: d,
                got: row.len(),
            });
        }
    }

    let mut frames = vec![0.0; n * d];
    for seg in 0..indices.len() - 1 {
        let (i0, i1) = (indices[seg], indices[seg + 1]);
        let (a, b) = (&keyframes[seg], &keyframes[seg + 1]);
        // Pre-decode segment endpoint rotations.
        let quats: Vec<(UnitQuaternion<f64>, UnitQuaternion<f64>)> = (0..skeleton.joint_count())
            .map(|j| {
                let c = layout.rot_col(j);
                let qa = quat_of(&a[c..c + 6])?;
                let qb = quat_of(&b[c..c + 6])?;
                Ok((qa, qb))
            })
            .collect::<Result<_, MetricsError>>()?;
        for f in i0..=i1 {
            let t = if i1 == i0 {
                0.0
            } else {
                (f - i0) as f64 / (i1 - i0) as f64
            };
            let row = &mut frames[f * d..(f + 1) * d];
            // Linear channels.
            for (k, slot) in row.iter_mut().enumerate() {
                *slot = a[k] + (b[k] - a[k]) * t;
            }
            // Rotation blocks by slerp.
            for (j, (qa, qb)) in quats.iter().enumerate() {
                let q = qa.slerp(qb, t);
                let enc = Rot6D::from_matrix(&q.to_rotation_matrix().into_inner())
                    .expect("slerp of unit quaternions is a rotation");
                let c = layout.rot_col(j);
                row[c..c + 6].copy_from_slice(&enc.to_array());
            }
        }
    }
    // Exactness at keyframes, bit for bit.
    for (row, &idx) in keyframes.iter().zip(indices) {
        frames[idx * d..(idx + 1) * d].copy_from_slice(row);
    }
    Ok(MotionClip::new(
        frames,
        skeleton.clone(),
        fps,
        indices.to_vec(),
    )?)
}

fn quat_of(r6: &[f64]) -> Result<UnitQuaternion<f64>, MetricsError> {
    let m = Rot6D::from_slice(r6).to_matrix()?;
    Ok(UnitQuaternion::from_matrix(&m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use bvh_io::canonical_skeleton;
    use motion_core::FrameFeature;
    use nalgebra::{Matrix3, Vector3};

    fn rest_row(skel: &Skeleton, py: f64) -> Vec<f64> {
        let layout = FrameLayout::new(skel.joint_count());
        FrameFeature {
            rotations: vec![motion_core::Rot6D::identity(); skel.joint_count()],
            vx: 0.0,
            py,
            vz: 0.0,
            root_angvel: [0.0; 6],
            extremity_vel: [Vector3::zeros(); 4],
        }
        .to_row(layout)
    }

    #[test]
    fn identical_endpoints_give_constant_clip() {
        let skel = canonical_skeleton(8);
        let row = rest_row(&skel, 0.9);
        let clip =
            interpolation_baseline(&[row.clone(), row.clone()], &[0, 9], 10, &skel, 30.0).unwrap();
        for f in 0..10 {
            assert_eq!(clip.row(f), row.as_slice());
        }
    }

    #[test]
    fn slerp_midpoint_is_half_rotation() {
        let skel = canonical_skeleton(8);
        let layout = clip_layout(&skel);
        let a = rest_row(&skel, 0.9);
        let mut b = a.clone();
        // 90° about z on the root.
        let rz = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        let enc = motion_core::Rot6D::from_matrix(&rz).unwrap().to_array();
        b[layout.rot_col(0)..layout.rot_col(0) + 6].copy_from_slice(&enc);

        let clip = interpolation_baseline(&[a, b], &[0, 10], 11, &skel, 30.0).unwrap();
        let mid = clip.feature(5).unwrap();
        let m = mid.rotations[0].to_matrix().unwrap();
        let expected = Matrix3::new(
            (std::f64::consts::FRAC_PI_4).cos(),
            -(std::f64::consts::FRAC_PI_4).sin(),
            0.0,
            (std::f64::consts::FRAC_PI_4).sin(),
            (std::f64::consts::FRAC_PI_4).cos(),
            0.0,
            0.0,
            0.0,
            1.0,
        );
        assert!((m - expected).abs().max() < 1e-9);
    }

    fn clip_layout(skel: &Skeleton) -> FrameLayout {
        FrameLayout::new(skel.joint_count())
    }

    #[test]
    fn root_height_interpolates_linearly() {
        let skel = canonical_skeleton(8);
        let a = rest_row(&skel, 0.0);
        let b = rest_row(&skel, 1.0);
        let clip = interpolation_baseline(&[a, b], &[0, 10], 11, &skel, 30.0).unwrap();
        let layout = clip_layout(&skel);
        for f in 0..11 {
            let py = clip.row(f)[layout.py_col()];
            assert!((py - f as f64 / 10.0).abs() < 1e-12, "frame {f}: {py}");
        }
    }

    #[test]
    fn missing_endpoints_are_rejected() {
        let skel = canonical_skeleton(8);
        let row = rest_row(&skel, 0.9);
        assert!(matches!(
            interpolation_baseline(&[row.clone(), row.clone()], &[0, 5], 10, &skel, 30.0),
            Err(MetricsError::NeedTwoKeyframes)
        ));
        assert!(interpolation_baseline(&[row], &[0], 1, &skel, 30.0).is_err());
    }
}
