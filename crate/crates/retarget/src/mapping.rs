//! Joint correspondences between two skeletons.

use std::collections::HashSet;

use motion_core::Skeleton;

use crate::RetargetError;

/// An injective source→target joint correspondence. The roots must always
/// map to each other.
#[derive(Debug, Clone)]
pub struct JointMapping {
    pairs: Vec<(usize, usize)>,
    src_joints: usize,
    dst_joints: usize,
}

impl JointMapping {
    pub fn new(
        pairs: Vec<(usize, usize)>,
        src: &Skeleton,
        dst: &Skeleton,
    ) -> Result<Self, RetargetError> {
        let mut seen_src = HashSet::new();
        let mut seen_dst = HashSet::new();
        let mut roots_mapped = false;
        for &(s, d) in &pairs {
            if s >= src.joint_count() || d >= dst.joint_count() {
                return Err(RetargetError::MappingMismatch(format!(
                    "pair ({s}, {d}) out of range"
                )));
            }
            if !seen_src.insert(s) || !seen_dst.insert(d) {
                return Err(RetargetError::MappingMismatch(format!(
                    "pair ({s}, {d}) repeats a joint"
                )));
            }
            if s == src.root_index() || d == dst.root_index() {
                if s != src.root_index() || d != dst.root_index() {
                    return Err(RetargetError::MappingMismatch(
                        "roots may only map to each other".into(),
                    ));
                }
                roots_mapped = true;
            }
        }
        if !roots_mapped {
            return Err(RetargetError::MappingMismatch(
                "root joints must be mapped".into(),
            ));
        }
        Ok(JointMapping {
            pairs,
            src_joints: src.joint_count(),
            dst_joints: dst.joint_count(),
        })
    }

    /// Identity mapping for retargeting a skeleton onto itself.
    pub fn identity(skel: &Skeleton) -> Self {
        JointMapping {
            pairs: (0..skel.joint_count()).map(|i| (i, i)).collect(),
            src_joints: skel.joint_count(),
            dst_joints: skel.joint_count(),
        }
    }

    /// Match joints by name where names coincide; the roots are always
    /// paired.
    pub fn by_name(src: &Skeleton, dst: &Skeleton) -> Result<Self, RetargetError> {
        let mut pairs = vec![(src.root_index(), dst.root_index())];
        for (si, j) in src.joints().iter().enumerate() {
            if si == src.root_index() {
                continue;
            }
            if let Some(di) = dst.joint_index(&j.name) {
                if di != dst.root_index() {
                    pairs.push((si, di));
                }
            }
        }
        JointMapping::new(pairs, src, dst)
    }

    /// Parse lines of the form `source_joint -> target_joint`; `#` starts a
    /// comment.
    pub fn parse(text: &str, src: &Skeleton, dst: &Skeleton) -> Result<Self, RetargetError> {
        let mut pairs = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((a, b)) = line.split_once("->") else {
                return Err(RetargetError::MappingMismatch(format!(
                    "line {}: expected 'source -> target', got {line:?}",
                    ln + 1
                )));
            };
            let (a, b) = (a.trim(), b.trim());
            let s = src.joint_index(a).ok_or_else(|| {
                RetargetError::MappingMismatch(format!("unknown source joint {a:?}"))
            })?;
            let d = dst.joint_index(b).ok_or_else(|| {
                RetargetError::MappingMismatch(format!("unknown target joint {b:?}"))
            })?;
            pairs.push((s, d));
        }
        JointMapping::new(pairs, src, dst)
    }

    pub fn to_text(&self, src: &Skeleton, dst: &Skeleton) -> String {
        let mut out = String::from("# source_joint -> target_joint\n");
        for &(s, d) in &self.pairs {
            out.push_str(&format!(
                "{} -> {}\n",
                src.joints()[s].name,
                dst.joints()[d].name
            ));
        }
        out
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Source joint mapped to a given target joint, if any.
    pub fn source_of(&self, dst_joint: usize) -> Option<usize> {
        self.pairs
            .iter()
            .find(|&&(_, d)| d == dst_joint)
            .map(|&(s, _)| s)
    }

    pub fn target_of(&self, src_joint: usize) -> Option<usize> {
        self.pairs
            .iter()
            .find(|&&(s, _)| s == src_joint)
            .map(|&(_, d)| d)
    }

    /// Swap direction.
    pub fn inverse(&self) -> JointMapping {
        JointMapping {
            pairs: self.pairs.iter().map(|&(s, d)| (d, s)).collect(),
            src_joints: self.dst_joints,
            dst_joints: self.src_joints,
        }
    }

    pub fn check(&self, src: &Skeleton, dst: &Skeleton) -> Result<(), RetargetError> {
        if src.joint_count() != self.src_joints || dst.joint_count() != self.dst_joints {
            return Err(RetargetError::MappingMismatch(format!(
                "mapping built for {}→{} joints, got {}→{}",
                self.src_joints,
                self.dst_joints,
                src.joint_count(),
                dst.joint_count()
            )));
        }
        Ok(())
    }
}
