//! Per-frame latent autoencoder used by K-FID and K-Diversity. Trained on
//! normalized features; latents are what the metrics compare.

use motion_core::{MotionClip, NormStats};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tensor_autodiff::{
    adam_step, bind, linear, AdamConfig, AdamState, Graph, Params, Tensor,
};

use crate::MetricsError;

#[derive(Debug, Clone)]
pub struct AutoencoderConfig {
    pub latent_dim: usize,
    pub hidden: usize,
    pub steps: usize,
    pub batch: usize,
    pub lr: f64,
    pub seed: u64,
    /// Fraction of frames held out for the reconstruction report.
    pub holdout: f64,
}

impl Default for AutoencoderConfig {
    fn default() -> Self {
        AutoencoderConfig {
            latent_dim: 32,
            hidden: 96,
            steps: 1500,
            batch: 64,
            lr: 3e-3,
            seed: 0,
            holdout: 0.1,
        }
    }
}

/// Encoder/decoder MLPs plus the feature normalization they were trained
/// against.
#[derive(Debug, Clone)]
pub struct LatentEncoder {
    pub params: Params,
    pub norm: NormStats,
    pub d_in: usize,
    pub latent_dim: usize,
    /// Held-out reconstruction MSE measured after training.
    pub holdout_error: f64,
}

impl LatentEncoder {
    /// Latent vector of one raw feature row.
    pub fn encode(&self, row: &[f64]) -> Result<Vec<f64>, MetricsError> {
        if row.len() != self.d_in {
            return Err(MetricsError::DimensionMismatch {
                expected: self.d_in,
                got: row.len(),
            });
        }
        let z: Vec<f64> = row
            .iter()
            .enumerate()
            .map(|(i, v)| (v - self.norm.mean[i]) / self.norm.std[i])
            .collect();
        let mut g = Graph::new();
        let bound = bind(&mut g, &self.params);
        let x = g.constant(Tensor::row_vec(z));
        let latent = encode_graph(&mut g, &bound, x)?;
        Ok(g.value(latent).data().to_vec())
    }

    /// Latents of every frame of a clip.
    pub fn encode_clip(&self, clip: &MotionClip) -> Result<Vec<Vec<f64>>, MetricsError> {
        (0..clip.len()).map(|f| self.encode(clip.row(f))).collect()
    }
}

fn encode_graph(
    g: &mut Graph,
    bound: &tensor_autodiff::Bound,
    x: tensor_autodiff::NodeId,
) -> Result<tensor_autodiff::NodeId, MetricsError> {
    let h = linear(g, x, bound, "enc1")?;
    let h = g.silu(h);
    Ok(linear(g, h, bound, "enc2")?)
}

fn decode_graph(
    g: &mut Graph,
    bound: &tensor_autodiff::Bound,
    z: tensor_autodiff::NodeId,
) -> Result<tensor_autodiff::NodeId, MetricsError> {
    let h = linear(g, z, bound, "dec1")?;
    let h = g.silu(h);
    Ok(linear(g, h, bound, "dec2")?)
}

/// Train the autoencoder on every frame of the dataset. Deterministic for a
/// fixed seed; reports the held-out reconstruction error.
pub fn train_autoencoder(
    dataset: &[MotionClip],
    cfg: &AutoencoderConfig,
) -> Result<LatentEncoder, MetricsError> {
    if dataset.is_empty() || dataset.iter().all(|c| c.len() == 0) {
        return Err(MetricsError::EmptyDataset);
    }
    let d = dataset[0].dim();
    let norm = NormStats::from_clips(dataset)?;

    // Collect normalized frames.
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for clip in dataset {
        for f in 0..clip.len() {
            rows.push(
                clip.row(f)
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v - norm.mean[i]) / norm.std[i])
                    .collect(),
            );
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for i in (1..rows.len()).rev() {
        let j = rng.random_range(0..=i);
        rows.swap(i, j);
    }
    let holdout_n = ((rows.len() as f64 * cfg.holdout) as usize).clamp(1, rows.len() - 1);
    let (holdout, train) = rows.split_at(holdout_n);

    let mut params = Params::new();
    params.init_linear("enc1", d, cfg.hidden, &mut rng);
    params.init_linear("enc2", cfg.hidden, cfg.latent_dim, &mut rng);
    params.init_linear("dec1", cfg.latent_dim, cfg.hidden, &mut rng);
    params.init_linear("dec2", cfg.hidden, d, &mut rng);

    let mut adam = AdamState::new();
    for _ in 0..cfg.steps {
        let b = cfg.batch.min(train.len());
        let mut batch = Vec::with_capacity(b * d);
        for _ in 0..b {
            let i = rng.random_range(0..train.len());
            batch.extend_from_slice(&train[i]);
        }
        let mut g = Graph::new();
        let bound = bind(&mut g, &params);
        let x = g.constant(Tensor::from_vec(b, d, batch));
        let z = encode_graph(&mut g, &bound, x)?;
        let y = decode_graph(&mut g, &bound, z)?;
        let diff = g.sub(y, x)?;
        let sq = g.mul(diff, diff)?;
        let loss = g.mean_all(sq);
        g.backward(loss)?;
        let grads = bound.grads(&g);
        adam_step(&mut params, &grads, &mut adam, &AdamConfig::with_lr(cfg.lr));
    }

    // Held-out reconstruction error.
    let holdout_error = {
        let b = holdout.len();
        let flat: Vec<f64> = holdout.iter().flatten().copied().collect();
        let mut g = Graph::new();
        let bound = bind(&mut g, &params);
        let x = g.constant(Tensor::from_vec(b, d, flat));
        let z = encode_graph(&mut g, &bound, x)?;
        let y = decode_graph(&mut g, &bound, z)?;
        let diff = g.sub(y, x)?;
        let sq = g.mul(diff, diff)?;
        let loss = g.mean_all(sq);
        g.value(loss).item()
    };

    Ok(LatentEncoder {
        params,
        norm,
        d_in: d,
        latent_dim: cfg.latent_dim,
        holdout_error,
    })
}

/// Mean and sample covariance of a latent set (rows are observations).
pub(crate) fn latent_stats(latents: &[Vec<f64>]) -> (Vec<f64>, nalgebra::DMatrix<f64>) {
    let n = latents.len();
    let d = latents[0].len();
    let mut mean = vec![0.0; d];
    for z in latents {
        for (m, v) in mean.iter_mut().zip(z) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut cov = nalgebra::DMatrix::zeros(d, d);
    if n > 1 {
        for z in latents {
            for i in 0..d {
                for j in 0..d {
                    cov[(i, j)] += (z[i] - mean[i]) * (z[j] - mean[j]);
                }
            }
        }
        cov /= (n - 1) as f64;
    }
    (mean, cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use bvh_io::{synth_dataset, SynthSpec};

    #[test]
    fn empty_dataset_is_rejected() {
        assert!(matches!(
            train_autoencoder(&[], &AutoencoderConfig::default()),
            Err(MetricsError::EmptyDataset)
        ));
    }

    #[test]
    fn seeded_training_is_deterministic() {
        let data = synth_dataset(
            &SynthSpec {
                n_clips: 3,
                frames: 16,
                ..SynthSpec::default()
            },
            1,
        );
        let cfg = AutoencoderConfig {
            steps: 30,
            ..AutoencoderConfig::default()
        };
        let a = train_autoencoder(&data, &cfg).unwrap();
        let b = train_autoencoder(&data, &cfg).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.holdout_error.to_bits(), b.holdout_error.to_bits());
    }

    #[test]
    fn wide_latent_reconstructs_tightly() {
        // d_z >= D: the autoencoder can afford an identity-capable map.
        let data = synth_dataset(
            &SynthSpec {
                n_clips: 8,
                frames: 30,
                ..SynthSpec::default()
            },
            3,
        );
        let d = data[0].dim();
        let cfg = AutoencoderConfig {
            latent_dim: d,
            hidden: 2 * d,
            steps: 1200,
            lr: 3e-3,
            ..AutoencoderConfig::default()
        };
        let enc = train_autoencoder(&data, &cfg).unwrap();
        assert!(
            enc.holdout_error < 1e-3,
            "held-out reconstruction {}",
            enc.holdout_error
        );
    }
}
