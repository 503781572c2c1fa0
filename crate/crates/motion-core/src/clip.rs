//! Motion clips as flat per-frame feature matrices.
//!
//! Each frame holds the 6D local rotations of all joints followed by the
//! root channels (vx, py, vz) and the auxiliary velocity term `u` (root
//! angular velocity in 6D-rate form plus hand/foot global velocities), for a
//! flattened width of `D = 6*J + 21`.

use nalgebra::Vector3;
use std::sync::Arc;

use crate::error::MotionError;
use crate::rotation::Rot6D;
use crate::skeleton::Skeleton;
use crate::{ROOT_CHANNELS, STD_FLOOR, U_CHANNELS};

/// Column bookkeeping for the flattened frame feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameLayout {
    pub joint_count: usize,
}

impl FrameLayout {
    pub fn new(joint_count: usize) -> Self {
        FrameLayout { joint_count }
    }

    /// Flattened width `D = 6*J + 21`.
    pub fn dim(&self) -> usize {
        6 * self.joint_count + ROOT_CHANNELS + U_CHANNELS
    }

    pub fn rot_col(&self, joint: usize) -> usize {
        6 * joint
    }

    pub fn rot_block(&self) -> std::ops::Range<usize> {
        0..6 * self.joint_count
    }

    pub fn vx_col(&self) -> usize {
        6 * self.joint_count
    }

    pub fn py_col(&self) -> usize {
        6 * self.joint_count + 1
    }

    pub fn vz_col(&self) -> usize {
        6 * self.joint_count + 2
    }

    pub fn u_block(&self) -> std::ops::Range<usize> {
        let s = 6 * self.joint_count + ROOT_CHANNELS;
        s..s + U_CHANNELS
    }

    /// Columns of the root angular velocity inside `u` (6D-rate form).
    pub fn root_angvel_block(&self) -> std::ops::Range<usize> {
        let s = 6 * self.joint_count + ROOT_CHANNELS;
        s..s + 6
    }

    /// Columns of extremity `k`'s global linear velocity inside `u`
    /// (k = 0..4: left hand, right hand, left foot, right foot).
    pub fn extremity_vel_block(&self, k: usize) -> std::ops::Range<usize> {
        let s = 6 * self.joint_count + ROOT_CHANNELS + 6 + 3 * k;
        s..s + 3
    }
}

/// One frame of the feature vector in structured form.
#[derive(Debug, Clone)]
pub struct FrameFeature {
    pub rotations: Vec<Rot6D>,
    pub vx: f64,
    pub py: f64,
    pub vz: f64,
    pub root_angvel: [f64; 6],
    pub extremity_vel: [Vector3<f64>; 4],
}

impl FrameFeature {
    pub fn from_row(row: &[f64], layout: FrameLayout) -> Result<Self, MotionError> {
        if row.len() != layout.dim() {
            return Err(MotionError::DimensionMismatch {
                expected: layout.dim(),
                got: row.len(),
            });
        }
        let rotations = (0..layout.joint_count)
            .map(|j| Rot6D::from_slice(&row[layout.rot_col(j)..layout.rot_col(j) + 6]))
            .collect();
        let mut root_angvel = [0.0; 6];
        root_angvel.copy_from_slice(&row[layout.root_angvel_block()]);
        let mut extremity_vel = [Vector3::zeros(); 4];
        for (k, v) in extremity_vel.iter_mut().enumerate() {
            let b = layout.extremity_vel_block(k);
            *v = Vector3::new(row[b.start], row[b.start + 1], row[b.start + 2]);
        }
        Ok(FrameFeature {
            rotations,
            vx: row[layout.vx_col()],
            py: row[layout.py_col()],
            vz: row[layout.vz_col()],
            root_angvel,
            extremity_vel,
        })
    }

    pub fn to_row(&self, layout: FrameLayout) -> Vec<f64> {
        let mut row = vec![0.0; layout.dim()];
        for (j, r) in self.rotations.iter().enumerate() {
            row[layout.rot_col(j)..layout.rot_col(j) + 6].copy_from_slice(&r.to_array());
        }
        row[layout.vx_col()] = self.vx;
        row[layout.py_col()] = self.py;
        row[layout.vz_col()] = self.vz;
        row[layout.root_angvel_block()].copy_from_slice(&self.root_angvel);
        for k in 0..4 {
            let b = layout.extremity_vel_block(k);
            row[b].copy_from_slice(self.extremity_vel[k].as_slice());
        }
        row
    }
}

/// A windowed motion clip: N frames of D features on a fixed skeleton,
/// with an optional sorted set of keyframe indices.
#[derive(Debug, Clone)]
pub struct MotionClip {
    frames: Vec<f64>,
    n_frames: usize,
    skeleton: Arc<Skeleton>,
    fps: f64,
    keyframe_indices: Vec<usize>,
}

impl MotionClip {
    pub fn new(
        frames: Vec<f64>,
        skeleton: Arc<Skeleton>,
        fps: f64,
        keyframe_indices: Vec<usize>,
    ) -> Result<Self, MotionError> {
        let dim = FrameLayout::new(skeleton.joint_count()).dim();
        if frames.len() % dim != 0 {
            return Err(MotionError::DimensionMismatch {
                expected: dim,
                got: frames.len(),
            });
        }
        let n_frames = frames.len() / dim;
        if n_frames < 2 {
            return Err(MotionError::TooShort(n_frames));
        }
        if !frames.iter().all(|v| v.is_finite()) {
            return Err(MotionError::InvalidSkeleton(
                "clip contains non-finite features".into(),
            ));
        }
        for w in keyframe_indices.windows(2) {
            if w[1] <= w[0] {
                return Err(MotionError::InvalidSkeleton(
                    "keyframe indices must be strictly increasing".into(),
                ));
            }
        }
        if let Some(&last) = keyframe_indices.last() {
            if last >= n_frames {
                return Err(MotionError::IndexOutOfRange {
                    index: last,
                    len: n_frames,
                });
            }
        }
        Ok(MotionClip {
            frames,
            n_frames,
            skeleton,
            fps,
            keyframe_indices,
        })
    }

    pub fn layout(&self) -> FrameLayout {
        FrameLayout::new(self.skeleton.joint_count())
    }

    pub fn dim(&self) -> usize {
        self.layout().dim()
    }

    pub fn len(&self) -> usize {
        self.n_frames
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: N >= 2
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn skeleton(&self) -> &Arc<Skeleton> {
        &self.skeleton
    }

    pub fn keyframe_indices(&self) -> &[usize] {
        &self.keyframe_indices
    }

    pub fn with_keyframes(&self, keyframe_indices: Vec<usize>) -> Result<Self, MotionError> {
        MotionClip::new(
            self.frames.clone(),
            self.skeleton.clone(),
            self.fps,
            keyframe_indices,
        )
    }

    pub fn row(&self, frame: usize) -> &[f64] {
        let d = self.dim();
        &self.frames[frame * d..(frame + 1) * d]
    }

    pub fn data(&self) -> &[f64] {
        &self.frames
    }

    pub fn feature(&self, frame: usize) -> Result<FrameFeature, MotionError> {
        if frame >= self.n_frames {
            return Err(MotionError::IndexOutOfRange {
                index: frame,
                len: self.n_frames,
            });
        }
        FrameFeature::from_row(self.row(frame), self.layout())
    }

    /// Replace the feature matrix, keeping skeleton/fps/keyframes.
    pub fn with_frames(&self, frames: Vec<f64>) -> Result<Self, MotionError> {
        MotionClip::new(
            frames,
            self.skeleton.clone(),
            self.fps,
            self.keyframe_indices.clone(),
        )
    }
}

/// Per-channel normalization statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    /// Mean and standard deviation over every frame of every clip.
    /// Standard deviations are floored at [`STD_FLOOR`].
    pub fn from_clips(clips: &[MotionClip]) -> Result<Self, MotionError> {
        let dim = clips
            .first()
            .map(|c| c.dim())
            .ok_or(MotionError::TooShort(0))?;
        let mut mean = vec![0.0; dim];
        let mut count = 0usize;
        for c in clips {
            if c.dim() != dim {
                return Err(MotionError::DimensionMismatch {
                    expected: dim,
                    got: c.dim(),
                });
            }
            for f in 0..c.len() {
                for (m, v) in mean.iter_mut().zip(c.row(f)) {
                    *m += v;
                }
            }
            count += c.len();
        }
        for m in mean.iter_mut() {
            *m /= count as f64;
        }
        let mut var = vec![0.0; dim];
        for c in clips {
            for f in 0..c.len() {
                for ((s, v), m) in var.iter_mut().zip(c.row(f)).zip(&mean) {
                    let d = v - m;
                    *s += d * d;
                }
            }
        }
        let std = var
            .into_iter()
            .map(|s| (s / count as f64).sqrt().max(STD_FLOOR))
            .collect();
        Ok(NormStats { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Z-score every channel of `clip` with `stats`.
pub fn normalize(clip: &MotionClip, stats: &NormStats) -> Result<MotionClip, MotionError> {
    if stats.dim() != clip.dim() {
        return Err(MotionError::DimensionMismatch {
            expected: clip.dim(),
            got: stats.dim(),
        });
    }
    let d = clip.dim();
    let frames = clip
        .data()
        .iter()
        .enumerate()
        .map(|(i, v)| (v - stats.mean[i % d]) / stats.std[i % d])
        .collect();
    clip.with_frames(frames)
}

/// Inverse of [`normalize`].
pub fn denormalize(clip: &MotionClip, stats: &NormStats) -> Result<MotionClip, MotionError> {
    if stats.dim() != clip.dim() {
        return Err(MotionError::DimensionMismatch {
            expected: clip.dim(),
            got: stats.dim(),
        });
    }
    let d = clip.dim();
    let frames = clip
        .data()
        .iter()
        .enumerate()
        .map(|(i, v)| v * stats.std[i % d] + stats.mean[i % d])
        .collect();
    clip.with_frames(frames)
}

/// Binary keyframe mask: rows at keyframe indices are all zeros, every other
/// row is all ones.
#[derive(Debug, Clone)]
pub struct KeyframeMask {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl KeyframeMask {
    pub fn new(n: usize, d: usize, keyframe_indices: &[usize]) -> Result<Self, MotionError> {
        let mut data = vec![1.0; n * d];
        for &k in keyframe_indices {
            if k >= n {
                return Err(MotionError::IndexOutOfRange { index: k, len: n });
            }
            data[k * d..(k + 1) * d].fill(0.0);
        }
        Ok(KeyframeMask { n, d, data })
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.d
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    /// 1.0 for in-between rows, 0.0 for keyframe rows.
    pub fn row_factor(&self, i: usize) -> f64 {
        self.data[i * self.d]
    }

    pub fn is_keyframe(&self, i: usize) -> bool {
        self.row_factor(i) == 0.0
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::skeleton::Joint;

    pub(crate) fn tiny_skeleton() -> Arc<Skeleton> {
        let joints = vec![
            Joint::new("Hips", None, Vector3::zeros()),
            Joint::new("LeftHand", Some(0), Vector3::new(0.3, 0.2, 0.0)),
            Joint::new("RightHand", Some(0), Vector3::new(-0.3, 0.2, 0.0)),
            Joint::new("LeftFoot", Some(0), Vector3::new(0.1, -0.9, 0.0)),
            Joint::new("RightFoot", Some(0), Vector3::new(-0.1, -0.9, 0.0)),
        ];
        Arc::new(Skeleton::new(joints, 0.9).unwrap())
    }

    fn rest_clip(n: usize) -> MotionClip {
        let skel = tiny_skeleton();
        let layout = FrameLayout::new(skel.joint_count());
        let feature = FrameFeature {
            rotations: vec![Rot6D::identity(); skel.joint_count()],
            vx: 0.0,
            py: 0.9,
            vz: 0.0,
            root_angvel: [0.0; 6],
            extremity_vel: [Vector3::zeros(); 4],
        };
        let row = feature.to_row(layout);
        let mut frames = Vec::new();
        for _ in 0..n {
            frames.extend_from_slice(&row);
        }
        MotionClip::new(frames, skel, 30.0, vec![]).unwrap()
    }

    #[test]
    fn layout_dimension() {
        let l = FrameLayout::new(5);
        assert_eq!(l.dim(), 5 * 6 + 21);
        assert_eq!(l.vx_col(), 30);
        assert_eq!(l.u_block().len(), 18);
    }

    #[test]
    fn frame_feature_round_trip() {
        let layout = FrameLayout::new(2);
        let f = FrameFeature {
            rotations: vec![Rot6D::identity(), Rot6D::identity()],
            vx: 0.1,
            py: 0.9,
            vz: -0.2,
            root_angvel: [1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            extremity_vel: [
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::new(0.0, 1.0, 0.0),
                Vector3::new(0.0, 0.0, 1.0),
                Vector3::new(1.0, 1.0, 1.0),
            ],
        };
        let row = f.to_row(layout);
        assert_eq!(row.len(), layout.dim());
        let g = FrameFeature::from_row(&row, layout).unwrap();
        assert_eq!(g.to_row(layout), row);
    }

    #[test]
    fn clip_invariants() {
        let skel = tiny_skeleton();
        let d = FrameLayout::new(skel.joint_count()).dim();
        // One frame is too short.
        assert!(matches!(
            MotionClip::new(vec![0.0; d], skel.clone(), 30.0, vec![]),
            Err(MotionError::TooShort(1))
        ));
        // Keyframes must be strictly increasing and in range.
        assert!(MotionClip::new(vec![0.0; 3 * d], skel.clone(), 30.0, vec![1, 1]).is_err());
        assert!(MotionClip::new(vec![0.0; 3 * d], skel, 30.0, vec![5]).is_err());
    }

    #[test]
    fn normalize_identity_and_round_trip() {
        let clip = rest_clip(4);
        let stats = NormStats {
            mean: vec![0.0; clip.dim()],
            std: vec![1.0; clip.dim()],
        };
        let normed = normalize(&clip, &stats).unwrap();
        assert_eq!(normed.data(), clip.data());

        // Constant channels get floored std; output stays finite.
        let fitted = NormStats::from_clips(std::slice::from_ref(&clip)).unwrap();
        assert!(fitted.std.iter().all(|&s| s >= STD_FLOOR));
        let z = normalize(&clip, &fitted).unwrap();
        assert!(z.data().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn normalize_round_trip_random() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let base = rest_clip(6);
        let frames: Vec<f64> = (0..base.data().len())
            .map(|_| rng.random::<f64>() * 4.0 - 2.0)
            .collect();
        let clip = base.with_frames(frames).unwrap();
        let stats = NormStats::from_clips(std::slice::from_ref(&clip)).unwrap();
        let rt = denormalize(&normalize(&clip, &stats).unwrap(), &stats).unwrap();
        let err = clip
            .data()
            .iter()
            .zip(rt.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-9, "round trip error {err}");
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let clip = rest_clip(3);
        let stats = NormStats {
            mean: vec![0.0; 3],
            std: vec![1.0; 3],
        };
        assert!(matches!(
            normalize(&clip, &stats),
            Err(MotionError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn mask_row_sums() {
        let m = KeyframeMask::new(5, 7, &[0, 3]).unwrap();
        for i in 0..5 {
            let sum: f64 = m.row(i).iter().sum();
            if i == 0 || i == 3 {
                assert_eq!(sum, 0.0);
                assert!(m.is_keyframe(i));
            } else {
                assert_eq!(sum, 7.0);
                assert!(!m.is_keyframe(i));
            }
        }
        assert!(KeyframeMask::new(4, 2, &[4]).is_err());
    }
}
