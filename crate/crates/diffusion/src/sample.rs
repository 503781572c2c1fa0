//! Keyframe-conditioned reverse sampling.
//!
//! Starts from Gaussian noise, composes the clean keyframes into the state
//! at every step, predicts the clean clip and walks the posterior of the
//! forward process. Output keyframe rows are finally copied bit-exactly from
//! the inputs.

use std::sync::Arc;

use motion_core::{KeyframeMask, MotionClip, Skeleton};
use rand::Rng;
use tensor_autodiff::Tensor;

use crate::error::DiffusionError;
use crate::model::{denoise, mask_compose, DenoiserModel};
use crate::schedule::{gaussian_like, NoiseSchedule};

#[derive(Debug, Clone, Copy, Default)]
pub struct SampleOptions {
    /// Drop the σ_t noise term, making the reverse walk a deterministic
    /// function of the initial noise.
    pub zero_sigma: bool,
}

/// Generate an N-frame clip conditioned on raw keyframe feature rows at the
/// given indices. The model may be untrained; output keyframe rows are
/// exact copies of the input either way.
pub fn sample_inbetween(
    model: &DenoiserModel,
    schedule: &NoiseSchedule,
    keyframes: &[Vec<f64>],
    indices: &[usize],
    n: usize,
    skeleton: &Arc<Skeleton>,
    fps: f64,
    rng: &mut impl Rng,
) -> Result<MotionClip, DiffusionError> {
    sample_inbetween_opts(
        model,
        schedule,
        keyframes,
        indices,
        n,
        skeleton,
        fps,
        rng,
        SampleOptions::default(),
    )
}

#[allow(clippy::too_many_arguments)]
pub fn sample_inbetween_opts(
    model: &DenoiserModel,
    schedule: &NoiseSchedule,
    keyframes: &[Vec<f64>],
    indices: &[usize],
    n: usize,
    skeleton: &Arc<Skeleton>,
    fps: f64,
    rng: &mut impl Rng,
    opts: SampleOptions,
) -> Result<MotionClip, DiffusionError> {
    let d = model.hyper.feature_dim;
    if keyframes.len() != indices.len() {
        return Err(DiffusionError::IndexOutOfRange {
            index: keyframes.len(),
            len: indices.len(),
        });
    }
    for &i in indices {
        if i >= n {
            return Err(DiffusionError::IndexOutOfRange { index: i, len: n });
        }
    }

    // Clean rows in normalized space, zero elsewhere (masked anyway).
    let mut x0n = Tensor::zeros(n, d);
    for (row, &idx) in keyframes.iter().zip(indices) {
        if row.len() != d {
            return Err(DiffusionError::Autodiff(
                tensor_autodiff::AdError::ShapeMismatch {
                    op: "sample_inbetween",
                    a: (1, row.len()),
                    b: (1, d),
                },
            ));
        }
        for (c, v) in row.iter().enumerate() {
            let z = (v - model.norm.mean[c]) / model.norm.std[c];
            x0n.set(idx, c, z);
        }
    }
    let mask = KeyframeMask::new(n, d, indices)?;

    let mut x = gaussian_like(n, d, rng);
    for t in (1..=schedule.timesteps()).rev() {
        let x_tilde = mask_compose(&x, &x0n, &mask)?;
        let x_hat = denoise(model, &x_tilde, t, &mask)?;
        let (c0, ct) = schedule.posterior_mean_coeffs(t);
        let mut next = Tensor::zeros(n, d);
        let sigma = if opts.zero_sigma || t == 1 {
            0.0
        } else {
            schedule.sigma(t)
        };
        let noise = if sigma > 0.0 {
            Some(gaussian_like(n, d, rng))
        } else {
            None
        };
        for k in 0..n * d {
            let mu = c0 * x_hat.data()[k] + ct * x_tilde.data()[k];
            let eps = noise.as_ref().map_or(0.0, |nz| nz.data()[k]);
            next.data_mut()[k] = mu + sigma * eps;
        }
        x = next;
    }

    // Denormalize, then overwrite keyframe rows with the raw inputs so they
    // are preserved bit-for-bit.
    let mut raw = vec![0.0; n * d];
    for (k, v) in x.data().iter().enumerate() {
        let c = k % d;
        raw[k] = v * model.norm.std[c] + model.norm.mean[c];
    }
    for (row, &idx) in keyframes.iter().zip(indices) {
        raw[idx * d..(idx + 1) * d].copy_from_slice(row);
    }
    Ok(MotionClip::new(
        raw,
        skeleton.clone(),
        fps,
        indices.to_vec(),
    )?)
}

/// Pull raw keyframe rows out of a reference clip.
pub fn keyframe_rows(clip: &MotionClip, indices: &[usize]) -> Vec<Vec<f64>> {
    indices.iter().map(|&i| clip.row(i).to_vec()).collect()
}
