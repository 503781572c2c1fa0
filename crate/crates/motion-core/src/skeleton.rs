//! Joint hierarchy with rest-pose offsets.

use nalgebra::Vector3;
use std::collections::HashSet;

use crate::error::MotionError;

/// A single joint: a name, an optional parent and a rest-pose translation
/// from the parent joint (meters).
#[derive(Debug, Clone)]
pub struct Joint {
    pub name: String,
    pub parent: Option<usize>,
    pub offset: Vector3<f64>,
}

impl Joint {
    pub fn new(name: impl Into<String>, parent: Option<usize>, offset: Vector3<f64>) -> Self {
        Joint {
            name: name.into(),
            parent,
            offset,
        }
    }
}

/// A joint hierarchy in topological order (every parent index precedes its
/// children), with the hip height used for root scaling during retargeting.
///
/// `extremities` names the four joints whose global linear velocities enter
/// the frame feature vector, ordered left hand, right hand, left foot,
/// right foot.
#[derive(Debug, Clone)]
pub struct Skeleton {
    joints: Vec<Joint>,
    root_index: usize,
    hip_height: f64,
    extremities: [usize; 4],
}

impl Skeleton {
    /// Build a skeleton, deriving the extremity joints from joint names
    /// (substring match on hand/foot, left/right). Falls back to the four
    /// deepest leaf joints when names carry no such hints.
    pub fn new(joints: Vec<Joint>, hip_height: f64) -> Result<Self, MotionError> {
        let extremities = detect_extremities(&joints)?;
        Self::with_extremities(joints, hip_height, extremities)
    }

    /// Build a skeleton with explicitly chosen extremity joints.
    pub fn with_extremities(
        joints: Vec<Joint>,
        hip_height: f64,
        extremities: [usize; 4],
    ) -> Result<Self, MotionError> {
        if joints.is_empty() {
            return Err(MotionError::InvalidSkeleton("no joints".into()));
        }
        if !(hip_height > 0.0) || !hip_height.is_finite() {
            return Err(MotionError::InvalidSkeleton(format!(
                "hip height must be positive, got {hip_height}"
            )));
        }
        let mut root = None;
        let mut names = HashSet::new();
        for (i, j) in joints.iter().enumerate() {
            if !names.insert(j.name.clone()) {
                return Err(MotionError::InvalidSkeleton(format!(
                    "duplicate joint name {:?}",
                    j.name
                )));
            }
            if !j.offset.iter().all(|v| v.is_finite()) {
                return Err(MotionError::InvalidSkeleton(format!(
                    "non-finite offset on joint {:?}",
                    j.name
                )));
            }
            match j.parent {
                None => {
                    if root.is_some() {
                        return Err(MotionError::InvalidSkeleton("multiple roots".into()));
                    }
                    root = Some(i);
                }
                Some(p) => {
                    if p >= i {
                        return Err(MotionError::InvalidSkeleton(format!(
                            "joint {i} has parent {p}; parents must precede children"
                        )));
                    }
                }
            }
        }
        let root_index = root.ok_or_else(|| MotionError::InvalidSkeleton("no root".into()))?;
        for &e in &extremities {
            if e >= joints.len() {
                return Err(MotionError::InvalidSkeleton(format!(
                    "extremity index {e} out of range"
                )));
            }
        }
        Ok(Skeleton {
            joints,
            root_index,
            hip_height,
            extremities,
        })
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    pub fn root_index(&self) -> usize {
        self.root_index
    }

    pub fn hip_height(&self) -> f64 {
        self.hip_height
    }

    pub fn extremities(&self) -> [usize; 4] {
        self.extremities
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    /// Indices of the children of `joint`.
    pub fn children(&self, joint: usize) -> Vec<usize> {
        self.joints
            .iter()
            .enumerate()
            .filter_map(|(i, j)| (j.parent == Some(joint)).then_some(i))
            .collect()
    }

    /// Depth of a joint in the hierarchy (root = 0).
    pub fn depth(&self, joint: usize) -> usize {
        let mut d = 0;
        let mut cur = joint;
        while let Some(p) = self.joints[cur].parent {
            d += 1;
            cur = p;
        }
        d
    }

    /// True if `descendant` lies in the subtree rooted at `ancestor`
    /// (a joint counts as its own descendant).
    pub fn is_descendant(&self, descendant: usize, ancestor: usize) -> bool {
        let mut cur = descendant;
        loop {
            if cur == ancestor {
                return true;
            }
            match self.joints[cur].parent {
                Some(p) => cur = p,
                None => return false,
            }
        }
    }
}

fn detect_extremities(joints: &[Joint]) -> Result<[usize; 4], MotionError> {
    let lower: Vec<String> = joints.iter().map(|j| j.name.to_lowercase()).collect();
    let is_left = |n: &str| n.contains("left") || n.starts_with("l_") || n.starts_with("l.");
    let is_right = |n: &str| n.contains("right") || n.starts_with("r_") || n.starts_with("r.");
    let find = |kind: &[&str], left: bool| -> Option<usize> {
        lower.iter().enumerate().position(|(_, n)| {
            kind.iter().any(|k| n.contains(k)) && if left { is_left(n) } else { is_right(n) }
        })
    };
    let named = [
        find(&["hand", "wrist"], true),
        find(&["hand", "wrist"], false),
        find(&["foot", "ankle", "toe"], true),
        find(&["foot", "ankle", "toe"], false),
    ];
    if let [Some(a), Some(b), Some(c), Some(d)] = named {
        return Ok([a, b, c, d]);
    }
    // Fallback: the four deepest leaves, by depth then index.
    let mut has_child = vec![false; joints.len()];
    for j in joints {
        if let Some(p) = j.parent {
            has_child[p] = true;
        }
    }
    let mut leaves: Vec<usize> = (0..joints.len()).filter(|&i| !has_child[i]).collect();
    let depth = |i: usize| {
        let mut d = 0;
        let mut cur = i;
        while let Some(p) = joints[cur].parent {
            d += 1;
            cur = p;
        }
        d
    };
    leaves.sort_by_key(|&i| (std::cmp::Reverse(depth(i)), i));
    // Fewer than four leaves: repeat the deepest so the feature layout
    // stays fixed even for stick-figure skeletons.
    while leaves.len() < 4 {
        leaves.push(leaves[0]);
    }
    let mut picked: Vec<usize> = leaves.into_iter().take(4).collect();
    picked.sort_unstable();
    Ok([picked[0], picked[1], picked[2], picked[3]])
}
