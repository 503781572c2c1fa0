//! Forward kinematics expressed in autodiff ops so the position loss can
//! backpropagate through Gram–Schmidt, rotation composition and the root
//! trajectory integration.

use motion_core::{FrameLayout, Skeleton};
use tensor_autodiff::{Graph, NodeId, Tensor};

use crate::error::DiffusionError;

/// Guard inside the Gram–Schmidt square roots so early-training predictions
/// with near-degenerate 6D blocks stay finite.
const GS_EPS: f64 = 1e-12;

/// Global joint positions (N × 3J, row-major per joint) from denormalized
/// frame features (N×D). Matches `motion_core::forward_kinematics` away
/// from degenerate rotations.
pub fn fk_positions_graph(
    g: &mut Graph,
    x_raw: NodeId,
    skeleton: &Skeleton,
) -> Result<NodeId, DiffusionError> {
    let layout = FrameLayout::new(skeleton.joint_count());
    let n = g.value(x_raw).rows();
    debug_assert_eq!(g.value(x_raw).cols(), layout.dim());

    // Root x/z by cumulative integration with frame 0 pinned at the origin.
    let vx = g.slice_cols(x_raw, layout.vx_col(), 1)?;
    let vz = g.slice_cols(x_raw, layout.vz_col(), 1)?;
    let py = g.slice_cols(x_raw, layout.py_col(), 1)?;
    let mut gate = vec![1.0; n];
    gate[0] = 0.0;
    let gate = g.constant(Tensor::col_vec(gate));
    let vx = g.mul(vx, gate)?;
    let vz = g.mul(vz, gate)?;
    let root_x = g.cumsum_rows(vx);
    let root_z = g.cumsum_rows(vz);

    let nj = skeleton.joint_count();
    let mut rot: Vec<Option<NodeId>> = vec![None; nj];
    let mut pos: Vec<Option<NodeId>> = vec![None; nj];
    for (j, joint) in skeleton.joints().iter().enumerate() {
        let r6 = g.slice_cols(x_raw, layout.rot_col(j), 6)?;
        let local = rot6d_to_mat_graph(g, r6)?;
        match joint.parent {
            None => {
                rot[j] = Some(local);
                let xy = g.concat_cols(root_x, py)?;
                pos[j] = Some(g.concat_cols(xy, root_z)?);
            }
            Some(p) => {
                let parent_rot = rot[p].expect("topological order");
                let parent_pos = pos[p].expect("topological order");
                rot[j] = Space::compose(g, parent_rot, local)?.into();
                let off = joint.offset;
                let moved = Space::rotate_const(g, parent_rot, [off.x, off.y, off.z])?;
                pos[j] = Some(g.add(parent_pos, moved)?);
            }
        }
    }

    let mut cat = pos[0].unwrap();
    for p in pos.iter().skip(1) {
        cat = g.concat_cols(cat, p.unwrap())?;
    }
    Ok(cat)
}

/// Per-frame Gram–Schmidt: N×6 → N×9 rotation matrices (row-major).
fn rot6d_to_mat_graph(g: &mut Graph, r6: NodeId) -> Result<NodeId, DiffusionError> {
    let a1 = g.slice_cols(r6, 0, 3)?;
    let a2 = g.slice_cols(r6, 3, 3)?;

    let sq = g.mul(a1, a1)?;
    let n1sq = g.row_sums(sq);
    let n1sq = g.add_scalar(n1sq, GS_EPS);
    let n1 = g.sqrt(n1sq);
    let b1 = g.div_col(a1, n1)?;

    let prod = g.mul(b1, a2)?;
    let proj = g.row_sums(prod);
    let scaled = g.mul_col(b1, proj)?;
    let r2 = g.sub(a2, scaled)?;
    let sq2 = g.mul(r2, r2)?;
    let n2sq = g.row_sums(sq2);
    let n2sq = g.add_scalar(n2sq, GS_EPS);
    let n2 = g.sqrt(n2sq);
    let b2 = g.div_col(r2, n2)?;

    let b3 = cross_graph(g, b1, b2)?;

    // Row-major [b1 b2 b3] columns: r[3i + k] = b_{k+1}[i].
    let cols = |g: &mut Graph, v: NodeId| -> Result<[NodeId; 3], DiffusionError> {
        Ok([
            g.slice_cols(v, 0, 1)?,
            g.slice_cols(v, 1, 1)?,
            g.slice_cols(v, 2, 1)?,
        ])
    };
    let c1 = cols(g, b1)?;
    let c2 = cols(g, b2)?;
    let c3 = cols(g, b3)?;
    let order = [
        c1[0], c2[0], c3[0], c1[1], c2[1], c3[1], c1[2], c2[2], c3[2],
    ];
    let mut cat = order[0];
    for id in &order[1..] {
        cat = g.concat_cols(cat, *id)?;
    }
    Ok(cat)
}

fn cross_graph(g: &mut Graph, a: NodeId, b: NodeId) -> Result<NodeId, DiffusionError> {
    let ax = g.slice_cols(a, 0, 1)?;
    let ay = g.slice_cols(a, 1, 1)?;
    let az = g.slice_cols(a, 2, 1)?;
    let bx = g.slice_cols(b, 0, 1)?;
    let by = g.slice_cols(b, 1, 1)?;
    let bz = g.slice_cols(b, 2, 1)?;
    let term = |g: &mut Graph, p: NodeId, q: NodeId, r: NodeId, s: NodeId| {
        let m1 = g.mul(p, q)?;
        let m2 = g.mul(r, s)?;
        g.sub(m1, m2)
    };
    let cx = term(g, ay, bz, az, by)?;
    let cy = term(g, az, bx, ax, bz)?;
    let cz = term(g, ax, by, ay, bx)?;
    let c = g.concat_cols(cx, cy)?;
    Ok(g.concat_cols(c, cz)?)
}

/// Internal helper namespace for N×9 rotation algebra.
struct Space;

impl Space {
    /// C = A·B per frame on row-major N×9 matrices.
    fn compose(g: &mut Graph, a: NodeId, b: NodeId) -> Result<NodeId, DiffusionError> {
        let acol = |g: &mut Graph, k: usize| g.slice_cols(a, k, 1);
        let bcol = |g: &mut Graph, k: usize| g.slice_cols(b, k, 1);
        let mut cols = Vec::with_capacity(9);
        for i in 0..3 {
            for j in 0..3 {
                let mut acc: Option<NodeId> = None;
                for k in 0..3 {
                    let av = acol(g, 3 * i + k)?;
                    let bv = bcol(g, 3 * k + j)?;
                    let m = g.mul(av, bv)?;
                    acc = Some(match acc {
                        None => m,
                        Some(s) => g.add(s, m)?,
                    });
                }
                cols.push(acc.unwrap());
            }
        }
        let mut cat = cols[0];
        for c in &cols[1..] {
            cat = g.concat_cols(cat, *c)?;
        }
        Ok(cat)
    }

    /// R · v for a constant 3-vector v: N×9 → N×3.
    fn rotate_const(g: &mut Graph, r: NodeId, v: [f64; 3]) -> Result<NodeId, DiffusionError> {
        let mut cols = Vec::with_capacity(3);
        for i in 0..3 {
            let mut acc: Option<NodeId> = None;
            for (k, &vk) in v.iter().enumerate() {
                if vk == 0.0 {
                    continue;
                }
                let col = g.slice_cols(r, 3 * i + k, 1)?;
                let s = g.scale(col, vk);
                acc = Some(match acc {
                    None => s,
                    Some(prev) => g.add(prev, s)?,
                });
            }
            let col = match acc {
                Some(id) => id,
                None => {
                    let n = g.value(r).rows();
                    g.constant(Tensor::zeros(n, 1))
                }
            };
            cols.push(col);
        }
        let c = g.concat_cols(cols[0], cols[1])?;
        Ok(g.concat_cols(c, cols[2])?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bvh_io::{canonical_skeleton, synth_clip, GaitParams};
    use motion_core::forward_kinematics;

    #[test]
    fn graph_fk_matches_reference_fk() {
        let skel = canonical_skeleton(8);
        let mut params = GaitParams::walk(0.8);
        params.turn_rate = 0.5;
        let clip = synth_clip(&skel, &params, 25, 30.0, 0.3);

        let mut g = Graph::new();
        let x = g.constant(Tensor::from_vec(clip.len(), clip.dim(), clip.data().to_vec()));
        let pos = fk_positions_graph(&mut g, x, &skel).unwrap();
        let got = g.value(pos);

        let fk = forward_kinematics(&clip).unwrap();
        for f in 0..clip.len() {
            for j in 0..skel.joint_count() {
                let p = fk.position(f, j);
                for (c, expect) in [p.x, p.y, p.z].into_iter().enumerate() {
                    let v = got.get(f, 3 * j + c);
                    assert!(
                        (v - expect).abs() < 1e-9,
                        "frame {f} joint {j} coord {c}: {v} vs {expect}"
                    );
                }
            }
        }
    }

    #[test]
    fn graph_fk_is_differentiable() {
        let skel = canonical_skeleton(8);
        let clip = synth_clip(&skel, &GaitParams::walk(0.6), 4, 30.0, 0.0);
        let x = Tensor::from_vec(clip.len(), clip.dim(), clip.data().to_vec());
        let report = tensor_autodiff::grad_check(
            |g, ids| {
                let pos = fk_positions_graph(g, ids[0], &skel)
                    .map_err(|_| tensor_autodiff::AdError::NotScalar((0, 0)))?;
                let sq = g.mul(pos, pos)?;
                Ok(g.sum_all(sq))
            },
            &[x],
            1e-5,
        )
        .unwrap();
        assert!(
            report.max_rel_err < 1e-5,
            "fk gradient rel err {}",
            report.max_rel_err
        );
    }
}
