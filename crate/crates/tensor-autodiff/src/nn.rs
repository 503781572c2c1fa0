//! Neural building blocks: linear layers, sinusoidal timestep embeddings
//! and multi-head self-attention with skewed relative position logits.

use crate::error::AdError;
use crate::graph::{Graph, NodeId};
use crate::params::Bound;
use crate::tensor::Tensor;

/// x · W + b with parameters `{name}.w` (in×out) and `{name}.b` (1×out).
pub fn linear(g: &mut Graph, x: NodeId, bound: &Bound, name: &str) -> Result<NodeId, AdError> {
    let w = bound.id(&format!("{name}.w"))?;
    let b = bound.id(&format!("{name}.b"))?;
    let xw = g.matmul(x, w)?;
    g.add_row(xw, b)
}

/// Layer norm with learned affine `{name}.gamma` / `{name}.beta` (1×d).
pub fn layer_norm(g: &mut Graph, x: NodeId, bound: &Bound, name: &str) -> Result<NodeId, AdError> {
    let normed = g.layer_norm_rows(x, 1e-5);
    let gamma = bound.id(&format!("{name}.gamma"))?;
    let beta = bound.id(&format!("{name}.beta"))?;
    let scaled = g.mul_row(normed, gamma)?;
    g.add_row(scaled, beta)
}

/// Standard interleaved sinusoidal embedding of a timestep:
/// `[sin(t·f_0), cos(t·f_0), sin(t·f_1), …]` with geometric frequencies
/// `f_i = 10000^(-2i/dim)`.
pub fn sinusoidal_embedding(t: f64, dim: usize) -> Result<Tensor, AdError> {
    if dim % 2 != 0 {
        return Err(AdError::OddDim(dim));
    }
    let mut data = vec![0.0; dim];
    for i in 0..dim / 2 {
        let freq = (10000.0f64).powf(-2.0 * i as f64 / dim as f64);
        data[2 * i] = (t * freq).sin();
        data[2 * i + 1] = (t * freq).cos();
    }
    Ok(Tensor::row_vec(data))
}

/// The skew trick: turn `s` (N × 2N-1), whose column `c` holds the logit for
/// relative distance `c - (N-1)`, into an N×N matrix with
/// `out[i][j] = s[i][j - i + N - 1]` using only pad/reshape/slice.
pub fn skew(g: &mut Graph, s: NodeId, n: usize) -> Result<NodeId, AdError> {
    let padded = g.pad_cols(s, 0, 1); // N × 2N
    let flat = g.reshape(padded, 1, n * 2 * n)?;
    let trimmed = g.slice_cols(flat, n - 1, (2 * n - 1) * n)?;
    let rows = g.reshape(trimmed, n, 2 * n - 1)?;
    g.slice_cols(rows, 0, n)
}

/// Reference relative-logit gather used to validate the skew path:
/// `out[i][j] = q_i · e_{clip(j-i)+R}` computed with explicit loops.
pub fn relative_logits_direct(q: &Tensor, table: &Tensor, max_rel: usize) -> Tensor {
    let n = q.rows();
    let d = q.cols();
    let mut out = Tensor::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let rel = (j as isize - i as isize)
                .clamp(-(max_rel as isize), max_rel as isize)
                + max_rel as isize;
            let erow = table.row(rel as usize);
            let mut acc = 0.0;
            for k in 0..d {
                acc += q.get(i, k) * erow[k];
            }
            out.set(i, j, acc);
        }
    }
    out
}

/// Relative-distance table rows needed for a sequence of length `n`:
/// index `k` of the result corresponds to distance `k - (n-1)`, clipped to
/// ±`max_rel` against a table with `2*max_rel+1` rows.
pub fn relative_index_window(n: usize, max_rel: usize) -> Vec<usize> {
    (0..2 * n - 1)
        .map(|k| {
            let rel = (k as isize - (n as isize - 1))
                .clamp(-(max_rel as isize), max_rel as isize);
            (rel + max_rel as isize) as usize
        })
        .collect()
}

/// Multi-head self-attention over an N×d sequence with learned relative
/// positional logits added via the skew procedure.
///
/// Parameters: `{name}.{wq,wk,wv,wo}.w/.b`. The relative table `rel_table`
/// has shape (2*max_rel+1) × d_head and is shared across heads.
pub fn mhsa(
    g: &mut Graph,
    x: NodeId,
    bound: &Bound,
    name: &str,
    heads: usize,
    rel_table: NodeId,
    max_rel: usize,
) -> Result<NodeId, AdError> {
    let (n, d) = {
        let t = g.value(x);
        t.shape()
    };
    if d % heads != 0 {
        return Err(AdError::ShapeMismatch {
            op: "mhsa",
            a: (n, d),
            b: (heads, 0),
        });
    }
    let dh = d / heads;
    let q = linear(g, x, bound, &format!("{name}.wq"))?;
    let k = linear(g, x, bound, &format!("{name}.wk"))?;
    let v = linear(g, x, bound, &format!("{name}.wv"))?;

    let window = relative_index_window(n, max_rel);
    let e_used = g.gather_rows(rel_table, &window)?; // (2N-1) × dh

    let inv_sqrt = 1.0 / (dh as f64).sqrt();
    let mut head_outputs = Vec::with_capacity(heads);
    for h in 0..heads {
        let qh = g.slice_cols(q, h * dh, dh)?;
        let kh = g.slice_cols(k, h * dh, dh)?;
        let vh = g.slice_cols(v, h * dh, dh)?;
        let kt = g.transpose(kh);
        let content = g.matmul(qh, kt)?; // N×N
        let et = g.transpose(e_used);
        let rel_raw = g.matmul(qh, et)?; // N×(2N-1)
        let rel = skew(g, rel_raw, n)?; // N×N
        let logits_sum = g.add(content, rel)?;
        let logits = g.scale(logits_sum, inv_sqrt);
        let attn = g.softmax_rows(logits);
        let out_h = g.matmul(attn, vh)?;
        head_outputs.push(out_h);
    }
    let mut cat = head_outputs[0];
    for &h in &head_outputs[1..] {
        cat = g.concat_cols(cat, h)?;
    }
    linear(g, cat, bound, &format!("{name}.wo"))
}

/// Position-wise feed-forward: linear → SiLU → linear, hidden width
/// `mult`× the model width. Parameters `{name}.ff1`, `{name}.ff2`.
pub fn pffn(g: &mut Graph, x: NodeId, bound: &Bound, name: &str) -> Result<NodeId, AdError> {
    let h = linear(g, x, bound, &format!("{name}.ff1"))?;
    let a = g.silu(h);
    linear(g, a, bound, &format!("{name}.ff2"))
}
