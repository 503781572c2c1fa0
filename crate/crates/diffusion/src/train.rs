//! Training loop: random keyframe masks up to the constrained rate, uniform
//! timesteps, forward noising, masked denoising and one Adam step per batch.

use std::collections::BTreeMap;

use motion_core::{normalize, KeyframeMask, MotionClip};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tensor_autodiff::{adam_step, bind, AdamConfig, AdamState, Tensor};

use crate::error::DiffusionError;
use crate::loss::{losses_graph, LossValues, LossWeights};
use crate::model::{denoise_forward_graph, mask_col_tensor, mask_compose, DenoiserModel};
use crate::schedule::{gaussian_like, q_sample, NoiseSchedule};

#[derive(Debug, Clone)]
pub struct TrainConfig {
    /// Maximum allowed ratio of keyframes to clip length; the per-clip
    /// keyframe count is drawn uniformly from 0..=ceil(rate·N).
    pub constrained_rate: f64,
    /// Training window length N.
    pub window: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub weights: LossWeights,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            constrained_rate: 0.2,
            window: 60,
            batch_size: 4,
            lr: 3e-4,
            weights: LossWeights::default(),
            seed: 0,
        }
    }
}

/// One optimizer step over a batch of equal-length clips.
pub fn train_step(
    model: &mut DenoiserModel,
    batch: &[MotionClip],
    schedule: &NoiseSchedule,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
    adam: &mut AdamState,
) -> Result<LossValues, DiffusionError> {
    assert!(!batch.is_empty());
    let n = batch[0].len();
    let d = batch[0].dim();
    let scale = 1.0 / batch.len() as f64;

    let mut grad_acc: BTreeMap<String, Tensor> = BTreeMap::new();
    let mut report = LossValues::default();
    for clip in batch {
        debug_assert_eq!((clip.len(), clip.dim()), (n, d));
        let kmax = (cfg.constrained_rate * n as f64).ceil() as usize;
        let count = rng.random_range(0..=kmax.min(n));
        let indices = sample_distinct(rng, n, count);
        let t = rng.random_range(1..=schedule.timesteps());

        let x0n_clip = normalize(clip, &model.norm)?;
        let x0n = Tensor::from_vec(n, d, x0n_clip.data().to_vec());
        let noise = gaussian_like(n, d, rng);
        let x_t = q_sample(&x0n, t, &noise, schedule);
        let mask = KeyframeMask::new(n, d, &indices)?;
        let x_tilde = mask_compose(&x_t, &x0n, &mask)?;

        let mut g = tensor_autodiff::Graph::new();
        let bound = bind(&mut g, &model.params);
        let x_in = g.constant(x_tilde);
        let mask_col = g.constant(mask_col_tensor(&mask));
        let x_hat = denoise_forward_graph(&mut g, &bound, &model.hyper, x_in, t, mask_col)?;
        let nodes = losses_graph(&mut g, x_hat, clip, &model.norm, &cfg.weights)?;
        let scaled_total = g.scale(nodes.total, scale);
        g.backward(scaled_total)?;

        report.simple += scale * g.value(nodes.simple).item();
        report.rot += scale * g.value(nodes.rot).item();
        report.pos += scale * g.value(nodes.pos).item();
        report.total += scale * g.value(nodes.total).item();

        for (name, grad) in bound.grads(&g) {
            grad_acc
                .entry(name)
                .and_modify(|t| t.add_assign(&grad))
                .or_insert(grad);
        }
    }

    adam_step(
        &mut model.params,
        &grad_acc,
        adam,
        &AdamConfig::with_lr(cfg.lr),
    );
    model.train_steps += 1;
    Ok(report)
}

/// Train for `steps` batches sampled from `dataset`, returning the loss
/// curve. Windows are cut from random positions when clips are longer than
/// the configured window.
pub fn train(
    model: &mut DenoiserModel,
    dataset: &[MotionClip],
    schedule: &NoiseSchedule,
    cfg: &TrainConfig,
    steps: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<LossValues>, DiffusionError> {
    assert!(!dataset.is_empty());
    let mut adam = AdamState::new();
    let mut curve = Vec::with_capacity(steps);
    for _ in 0..steps {
        let mut batch = Vec::with_capacity(cfg.batch_size);
        for _ in 0..cfg.batch_size {
            let clip = &dataset[rng.random_range(0..dataset.len())];
            batch.push(window_clip(clip, cfg.window, rng)?);
        }
        let report = train_step(model, &batch, schedule, cfg, rng, &mut adam)?;
        curve.push(report);
    }
    Ok(curve)
}

/// Random window of length `window` (or the full clip when shorter).
fn window_clip(
    clip: &MotionClip,
    window: usize,
    rng: &mut ChaCha8Rng,
) -> Result<MotionClip, DiffusionError> {
    if clip.len() <= window {
        return Ok(clip.clone());
    }
    let start = rng.random_range(0..=clip.len() - window);
    let d = clip.dim();
    let data = clip.data()[start * d..(start + window) * d].to_vec();
    Ok(MotionClip::new(
        data,
        clip.skeleton().clone(),
        clip.fps(),
        vec![],
    )?)
}

fn sample_distinct(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..count.min(n) {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    let mut picked: Vec<usize> = pool[..count.min(n)].to_vec();
    picked.sort_unstable();
    picked
}

/// CSV loss curve: step, L_simple, L_rot, L_pos, L_total.
pub fn loss_curve_csv(curve: &[LossValues]) -> String {
    let mut out = String::from("step,l_simple,l_rot,l_pos,l_total\n");
    for (i, v) in curve.iter().enumerate() {
        out.push_str(&format!(
            "{},{:.9},{:.9},{:.9},{:.9}\n",
            i, v.simple, v.rot, v.pos, v.total
        ));
    }
    out
}
