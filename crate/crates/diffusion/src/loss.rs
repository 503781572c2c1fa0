//! The three-term training objective: reconstruction in normalized feature
//! space, L1 on local rotations and L1 on FK global positions, both taken
//! on denormalized features.

use motion_core::{forward_kinematics, MotionClip, NormStats, Skeleton};
use std::sync::Arc;
use tensor_autodiff::{Graph, NodeId, Tensor};

use crate::error::DiffusionError;
use crate::fkgraph::fk_positions_graph;

/// Loss weights; the totals below mirror the training objective
/// L = λ_simple·L_simple + λ_rot·L_rot + λ_pos·L_pos.
#[derive(Debug, Clone, Copy)]
pub struct LossWeights {
    pub simple: f64,
    pub rot: f64,
    pub pos: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            simple: 1.0,
            rot: 1.0,
            pos: 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LossValues {
    pub simple: f64,
    pub rot: f64,
    pub pos: f64,
    pub total: f64,
}

/// Graph node handles for the individual terms.
pub struct LossNodes {
    pub simple: NodeId,
    pub rot: NodeId,
    pub pos: NodeId,
    pub total: NodeId,
}

/// Build the full loss. `x_hat` is the model output in normalized space
/// (N×D); `x0_raw` the clean clip in raw feature units. The FK reference
/// positions are computed with the standalone kinematics path, so the
/// in-graph FK is exercised against an independent implementation.
pub fn losses_graph(
    g: &mut Graph,
    x_hat: NodeId,
    x0_raw: &MotionClip,
    norm: &NormStats,
    weights: &LossWeights,
) -> Result<LossNodes, DiffusionError> {
    let skeleton = x0_raw.skeleton().clone();
    let layout = x0_raw.layout();
    let n = x0_raw.len();
    let d = layout.dim();

    let x0_norm = {
        let normed = motion_core::normalize(x0_raw, norm)?;
        g.constant(Tensor::from_vec(n, d, normed.data().to_vec()))
    };

    // L_simple: MSE in normalized space.
    let diff = g.sub(x_hat, x0_norm)?;
    let sq = g.mul(diff, diff)?;
    let simple = g.mean_all(sq);

    // Denormalize the prediction for the geometric terms.
    let std_row = g.constant(Tensor::row_vec(norm.std.clone()));
    let mean_row = g.constant(Tensor::row_vec(norm.mean.clone()));
    let scaled = g.mul_row(x_hat, std_row)?;
    let x_hat_raw = g.add_row(scaled, mean_row)?;
    let x0_raw_node = g.constant(Tensor::from_vec(n, d, x0_raw.data().to_vec()));

    // L_rot: per-frame L1 over the rotation block, averaged over frames.
    let rot_cols = layout.rot_block().len();
    let pred_rot = g.slice_cols(x_hat_raw, 0, rot_cols)?;
    let ref_rot = g.slice_cols(x0_raw_node, 0, rot_cols)?;
    let rdiff = g.sub(pred_rot, ref_rot)?;
    let rabs = g.abs(rdiff);
    let rsum = g.sum_all(rabs);
    let rot = g.scale(rsum, 1.0 / n as f64);

    // L_pos: per-frame L1 over FK global positions, averaged over frames.
    let pred_pos = fk_positions_graph(g, x_hat_raw, &skeleton)?;
    let ref_pos = g.constant(reference_positions(x0_raw, &skeleton)?);
    let pdiff = g.sub(pred_pos, ref_pos)?;
    let pabs = g.abs(pdiff);
    let psum = g.sum_all(pabs);
    let pos = g.scale(psum, 1.0 / n as f64);

    let ws = g.scale(simple, weights.simple);
    let wr = g.scale(rot, weights.rot);
    let wp = g.scale(pos, weights.pos);
    let t = g.add(ws, wr)?;
    let total = g.add(t, wp)?;
    Ok(LossNodes {
        simple,
        rot,
        pos,
        total,
    })
}

/// FK positions of the clean clip flattened to N×3J, computed with the
/// reference (non-graph) kinematics.
fn reference_positions(
    clip: &MotionClip,
    skeleton: &Arc<Skeleton>,
) -> Result<Tensor, DiffusionError> {
    let fk = forward_kinematics(clip)?;
    let nj = skeleton.joint_count();
    let mut data = Vec::with_capacity(clip.len() * 3 * nj);
    for f in 0..clip.len() {
        for j in 0..nj {
            let p = fk.position(f, j);
            data.extend_from_slice(&[p.x, p.y, p.z]);
        }
    }
    Ok(Tensor::from_vec(clip.len(), 3 * nj, data))
}

/// Evaluate the loss terms for a prediction without keeping the graph.
pub fn losses(
    x_hat_norm: &Tensor,
    x0_raw: &MotionClip,
    norm: &NormStats,
    weights: &LossWeights,
) -> Result<LossValues, DiffusionError> {
    let mut g = Graph::new();
    let x = g.constant(x_hat_norm.clone());
    let nodes = losses_graph(&mut g, x, x0_raw, norm, weights)?;
    Ok(LossValues {
        simple: g.value(nodes.simple).item(),
        rot: g.value(nodes.rot).item(),
        pos: g.value(nodes.pos).item(),
        total: g.value(nodes.total).item(),
    })
}
