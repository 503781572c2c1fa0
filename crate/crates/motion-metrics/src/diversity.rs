//! K-Diversity: mean latent distance over random frame pairs within each
//! clip, averaged across clips.

use motion_core::MotionClip;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autoenc::LatentEncoder;
use crate::MetricsError;

/// Mean over `num_pairs` random (i, j), i≠j, of ‖z_i − z_j‖₂.
pub fn latent_diversity(latents: &[Vec<f64>], num_pairs: usize, rng: &mut ChaCha8Rng) -> f64 {
    let n = latents.len();
    if n < 2 || num_pairs == 0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for _ in 0..num_pairs {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        acc += latents[i]
            .iter()
            .zip(&latents[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
    }
    acc / num_pairs as f64
}

/// K-Diversity over a set of clips, seeded for reproducibility.
pub fn k_diversity(
    clips: &[MotionClip],
    encoder: &LatentEncoder,
    num_pairs: usize,
    seed: u64,
) -> Result<f64, MetricsError> {
    if clips.is_empty() {
        return Err(MetricsError::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = 0.0;
    for clip in clips {
        let latents = encoder.encode_clip(clip)?;
        acc += latent_diversity(&latents, num_pairs, &mut rng);
    }
    Ok(acc / clips.len() as f64)
}
