//! The keyframe-masked denoiser: MLP encoder, L masked transformer layers
//! with relative positional attention, MLP decoder.
//!
//! Keyframe rows of the latent are never updated: both the attention and
//! feed-forward residual branches are multiplied by the keyframe mask before
//! being added back, so clean keyframes pass through the stack unchanged.

use std::path::Path;

use motion_core::{KeyframeMask, NormStats};
use rand::Rng;
use tensor_autodiff::{
    layer_norm, linear, load_checkpoint, mhsa, pffn, save_checkpoint, sinusoidal_embedding, Bound,
    Graph, NodeId, Params, Tensor,
};

use crate::error::DiffusionError;

/// Architecture hyperparameters. Desk-scale defaults; the feature width D
/// comes from the skeleton (D = 6J + 21).
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiserHyper {
    pub feature_dim: usize,
    pub layers: usize,
    pub d_model: usize,
    pub heads: usize,
    pub d_time: usize,
    pub d_sin: usize,
    pub hidden: usize,
    pub timesteps: usize,
    pub max_rel: usize,
}

impl DenoiserHyper {
    pub fn desk_scale(feature_dim: usize) -> Self {
        DenoiserHyper {
            feature_dim,
            layers: 4,
            d_model: 96,
            heads: 4,
            d_time: 24,
            d_sin: 32,
            hidden: 128,
            timesteps: 100,
            max_rel: 512,
        }
    }

    /// Smaller variant for tests and quick experiments.
    pub fn tiny(feature_dim: usize) -> Self {
        DenoiserHyper {
            feature_dim,
            layers: 2,
            d_model: 32,
            heads: 2,
            d_time: 8,
            d_sin: 16,
            hidden: 48,
            timesteps: 20,
            max_rel: 128,
        }
    }

    pub fn d_motion(&self) -> usize {
        self.d_model - self.d_time
    }

    pub fn d_head(&self) -> usize {
        self.d_model / self.heads
    }

    fn to_tensor(&self) -> Tensor {
        Tensor::row_vec(vec![
            self.feature_dim as f64,
            self.layers as f64,
            self.d_model as f64,
            self.heads as f64,
            self.d_time as f64,
            self.d_sin as f64,
            self.hidden as f64,
            self.timesteps as f64,
            self.max_rel as f64,
        ])
    }

    fn from_tensor(t: &Tensor) -> Result<Self, DiffusionError> {
        if t.len() != 9 {
            return Err(DiffusionError::BadSchedule(
                "malformed hyperparameter record in checkpoint".into(),
            ));
        }
        let v = t.data();
        Ok(DenoiserHyper {
            feature_dim: v[0] as usize,
            layers: v[1] as usize,
            d_model: v[2] as usize,
            heads: v[3] as usize,
            d_time: v[4] as usize,
            d_sin: v[5] as usize,
            hidden: v[6] as usize,
            timesteps: v[7] as usize,
            max_rel: v[8] as usize,
        })
    }
}

/// Trainable parameters plus the normalization statistics they were trained
/// against.
#[derive(Debug, Clone)]
pub struct DenoiserModel {
    pub hyper: DenoiserHyper,
    pub params: Params,
    pub norm: NormStats,
    pub train_steps: u64,
}

impl DenoiserModel {
    pub fn new(hyper: DenoiserHyper, norm: NormStats, rng: &mut impl Rng) -> Self {
        assert_eq!(norm.dim(), hyper.feature_dim, "stats must match D");
        assert!(hyper.d_model % hyper.heads == 0);
        assert!(hyper.d_time < hyper.d_model);
        let mut p = Params::new();
        p.init_linear("enc1", hyper.feature_dim, hyper.hidden, rng);
        p.init_linear("enc2", hyper.hidden, hyper.d_motion(), rng);
        p.init_linear("time1", hyper.d_sin, hyper.d_time, rng);
        p.init_linear("time2", hyper.d_time, hyper.d_time, rng);
        for l in 0..hyper.layers {
            let d = hyper.d_model;
            p.insert(format!("l{l}.ln1.gamma"), Tensor::full(1, d, 1.0));
            p.insert(format!("l{l}.ln1.beta"), Tensor::zeros(1, d));
            p.insert(format!("l{l}.ln2.gamma"), Tensor::full(1, d, 1.0));
            p.insert(format!("l{l}.ln2.beta"), Tensor::zeros(1, d));
            for w in ["wq", "wk", "wv", "wo"] {
                p.init_linear(&format!("l{l}.att.{w}"), d, d, rng);
            }
            p.init_linear(&format!("l{l}.ff1"), d, 4 * d, rng);
            p.init_linear(&format!("l{l}.ff2"), 4 * d, d, rng);
        }
        p.insert(
            "rel_pe",
            Tensor::randn(2 * hyper.max_rel + 1, hyper.d_head(), 0.02, rng),
        );
        p.init_linear("dec1", hyper.d_model, hyper.hidden, rng);
        p.init_linear("dec2", hyper.hidden, hyper.feature_dim, rng);
        DenoiserModel {
            hyper,
            params: p,
            norm,
            train_steps: 0,
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), DiffusionError> {
        let mut all = self.params.clone();
        all.insert("_norm.mean", Tensor::row_vec(self.norm.mean.clone()));
        all.insert("_norm.std", Tensor::row_vec(self.norm.std.clone()));
        all.insert("_hyper", self.hyper.to_tensor());
        all.insert("_train_steps", Tensor::scalar(self.train_steps as f64));
        save_checkpoint(&all, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, DiffusionError> {
        let all = load_checkpoint(path)?;
        let hyper = DenoiserHyper::from_tensor(all.get("_hyper")?)?;
        let norm = NormStats {
            mean: all.get("_norm.mean")?.data().to_vec(),
            std: all.get("_norm.std")?.data().to_vec(),
        };
        let train_steps = all.get("_train_steps")?.item() as u64;
        let mut params = Params::new();
        for (name, t) in all.iter() {
            if !name.starts_with('_') {
                params.insert(name.clone(), t.clone());
            }
        }
        Ok(DenoiserModel {
            hyper,
            params,
            norm,
            train_steps,
        })
    }
}

/// Build the denoiser forward pass in `g`. `x_tilde` is the normalized
/// mask-composed input (N×D) and `mask_col` the N×1 row mask (0 at
/// keyframes). Returns the predicted clean motion (normalized, N×D).
pub fn denoise_forward_graph(
    g: &mut Graph,
    bound: &Bound,
    hyper: &DenoiserHyper,
    x_tilde: NodeId,
    t: usize,
    mask_col: NodeId,
) -> Result<NodeId, DiffusionError> {
    let n = g.value(x_tilde).rows();

    // Eq-style encoder: motion embedding concatenated with the broadcast
    // timestep embedding.
    let h = linear(g, x_tilde, bound, "enc1")?;
    let h = g.silu(h);
    let h = linear(g, h, bound, "enc2")?;

    let sin = sinusoidal_embedding(t as f64, hyper.d_sin)?;
    let sin = g.constant(sin);
    let te = linear(g, sin, bound, "time1")?;
    let te = g.silu(te);
    let te = linear(g, te, bound, "time2")?;
    let te = g.repeat_rows(te, n)?;
    let mut state = g.concat_cols(h, te)?;

    let rel = bound.id("rel_pe")?;
    for l in 0..hyper.layers {
        let normed = layer_norm(g, state, bound, &format!("l{l}.ln1"))?;
        let att = mhsa(
            g,
            normed,
            bound,
            &format!("l{l}.att"),
            hyper.heads,
            rel,
            hyper.max_rel,
        )?;
        let att = g.mul_col(att, mask_col)?;
        let mid = g.add(state, att)?;

        let normed = layer_norm(g, mid, bound, &format!("l{l}.ln2"))?;
        let ff = pffn(g, normed, bound, &format!("l{l}"))?;
        let ff = g.mul_col(ff, mask_col)?;
        state = g.add(mid, ff)?;
    }

    let d = linear(g, state, bound, "dec1")?;
    let d = g.silu(d);
    Ok(linear(g, d, bound, "dec2")?)
}

/// Evaluate the denoiser outside any training graph.
pub fn denoise(
    model: &DenoiserModel,
    x_tilde: &Tensor,
    t: usize,
    mask: &KeyframeMask,
) -> Result<Tensor, DiffusionError> {
    let mut g = Graph::new();
    let bound = bind_constants(&mut g, &model.params);
    let x = g.constant(x_tilde.clone());
    let mask_col = g.constant(mask_col_tensor(mask));
    let out = denoise_forward_graph(&mut g, &bound, &model.hyper, x, t, mask_col)?;
    Ok(g.value(out).clone())
}

/// Bind parameters without gradient tracking (inference).
pub fn bind_constants(g: &mut Graph, params: &Params) -> Bound {
    let mut bound = Bound::empty();
    for (name, t) in params.iter() {
        let id = g.constant(t.clone());
        bound.insert(name.clone(), id);
    }
    bound
}

/// N×1 column holding each row's mask factor (0 at keyframes, 1 elsewhere).
pub fn mask_col_tensor(mask: &KeyframeMask) -> Tensor {
    Tensor::col_vec((0..mask.rows()).map(|i| mask.row_factor(i)).collect())
}

/// Keyframe composition: noisy rows where the mask is 1, clean rows where it
/// is 0. Keyframe entries are copied bit-exactly rather than recomputed
/// through arithmetic.
pub fn mask_compose(x_t: &Tensor, x0: &Tensor, mask: &KeyframeMask) -> Result<Tensor, DiffusionError> {
    if x_t.shape() != x0.shape() || x_t.shape() != (mask.rows(), mask.cols()) {
        return Err(DiffusionError::Autodiff(
            tensor_autodiff::AdError::ShapeMismatch {
                op: "mask_compose",
                a: x_t.shape(),
                b: x0.shape(),
            },
        ));
    }
    let mut out = x_t.clone();
    for (k, o) in out.data_mut().iter_mut().enumerate() {
        let m = mask.data()[k];
        if m == 0.0 {
            *o = x0.data()[k];
        } else if m != 1.0 {
            *o = *o * m + x0.data()[k] * (1.0 - m);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use motion_core::STD_FLOOR;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_stats(d: usize) -> NormStats {
        NormStats {
            mean: vec![0.0; d],
            std: vec![1.0f64.max(STD_FLOOR); d],
        }
    }

    #[test]
    fn mask_compose_cases() {
        let x_t = Tensor::from_vec(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let x0 = Tensor::from_vec(3, 2, vec![-1.0, -2.0, -3.0, -4.0, -5.0, -6.0]);
        // All ones → x_t.
        let m = KeyframeMask::new(3, 2, &[]).unwrap();
        assert_eq!(mask_compose(&x_t, &x0, &m).unwrap().data(), x_t.data());
        // All zeros → x0.
        let m = KeyframeMask::new(3, 2, &[0, 1, 2]).unwrap();
        assert_eq!(mask_compose(&x_t, &x0, &m).unwrap().data(), x0.data());
        // Mixed: keyframe rows bitwise equal to x0.
        let m = KeyframeMask::new(3, 2, &[1]).unwrap();
        let out = mask_compose(&x_t, &x0, &m).unwrap();
        assert_eq!(&out.data()[2..4], &x0.data()[2..4]);
        assert_eq!(&out.data()[0..2], &x_t.data()[0..2]);
    }

    #[test]
    fn keyframe_rows_pass_through_the_stack() {
        // With masked residuals, the decoder input at keyframe rows equals
        // h0 there, for any random model.
        let d = 33;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let model = DenoiserModel::new(DenoiserHyper::tiny(d), unit_stats(d), &mut rng);
        let n = 7;
        let x = Tensor::randn(n, d, 1.0, &mut rng);
        let mask = KeyframeMask::new(n, d, &[0, 3, 6]).unwrap();

        // Full stack.
        let full = denoise(&model, &x, 3, &mask).unwrap();

        // Layerless path: encoder + time embedding, then decoder directly.
        let mut hz = model.hyper.clone();
        hz.layers = 0;
        let layerless = {
            let mut g = Graph::new();
            let bound = bind_constants(&mut g, &model.params);
            let xid = g.constant(x.clone());
            let mcol = g.constant(mask_col_tensor(&mask));
            let out = denoise_forward_graph(&mut g, &bound, &hz, xid, 3, mcol).unwrap();
            g.value(out).clone()
        };
        for &k in &[0usize, 3, 6] {
            for c in 0..d {
                assert_eq!(
                    full.get(k, c),
                    layerless.get(k, c),
                    "keyframe row {k} must be untouched by the layers"
                );
            }
        }
        // Non-keyframe rows do change.
        let moved = (0..d).any(|c| full.get(1, c) != layerless.get(1, c));
        assert!(moved);
    }

    #[test]
    fn all_zero_mask_reduces_to_rowwise_mlp() {
        // Mask all zeros: no residual updates at all, so the full stack is
        // exactly decoder∘encoder with no cross-frame mixing.
        let d = 33;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let model = DenoiserModel::new(DenoiserHyper::tiny(d), unit_stats(d), &mut rng);
        let n = 5;
        let x = Tensor::randn(n, d, 1.0, &mut rng);
        let mask = KeyframeMask::new(n, d, &(0..n).collect::<Vec<_>>()).unwrap();
        let full = denoise(&model, &x, 2, &mask).unwrap();

        let mut hz = model.hyper.clone();
        hz.layers = 0;
        let mut g = Graph::new();
        let bound = bind_constants(&mut g, &model.params);
        let xid = g.constant(x.clone());
        let mcol = g.constant(mask_col_tensor(&mask));
        let out = denoise_forward_graph(&mut g, &bound, &hz, xid, 2, mcol).unwrap();
        let layerless = g.value(out).clone();
        for (a, b) in full.data().iter().zip(layerless.data()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn output_shape_tracks_input_length() {
        let d = 33;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let model = DenoiserModel::new(DenoiserHyper::tiny(d), unit_stats(d), &mut rng);
        for n in [2usize, 5, 17, 40] {
            let x = Tensor::randn(n, d, 1.0, &mut rng);
            let mask = KeyframeMask::new(n, d, &[0]).unwrap();
            let out = denoise(&model, &x, 1, &mask).unwrap();
            assert_eq!(out.shape(), (n, d));
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let d = 33;
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let model = DenoiserModel::new(DenoiserHyper::tiny(d), unit_stats(d), &mut rng);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("denoiser.ckpt");
        model.save(&path).unwrap();
        let loaded = DenoiserModel::load(&path).unwrap();
        assert_eq!(model.hyper, loaded.hyper);
        assert_eq!(model.params, loaded.params);
        assert_eq!(model.norm, loaded.norm);
    }
}
