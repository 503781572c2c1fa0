//! Noise schedules for the forward process and the reverse-step posterior.

use rand::Rng;
use tensor_autodiff::Tensor;

use crate::error::DiffusionError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    Linear,
    Cosine,
}

/// Betas plus everything derived from them. The terminal signal level
/// alpha_bar(T) must fall below 1e-3 so x_T is effectively pure noise.
#[derive(Debug, Clone)]
pub struct NoiseSchedule {
    betas: Vec<f64>,
    alphas: Vec<f64>,
    alpha_bars: Vec<f64>,
    posterior_var: Vec<f64>,
}

const TERMINAL_SIGNAL: f64 = 1e-3;

impl NoiseSchedule {
    pub fn make(timesteps: usize, kind: ScheduleKind) -> Result<Self, DiffusionError> {
        if timesteps == 0 {
            return Err(DiffusionError::BadSchedule("T must be >= 1".into()));
        }
        let betas = match kind {
            ScheduleKind::Linear => linear_betas(timesteps),
            ScheduleKind::Cosine => cosine_betas(timesteps),
        };
        Self::from_betas(betas)
    }

    pub fn from_betas(betas: Vec<f64>) -> Result<Self, DiffusionError> {
        if betas.iter().any(|&b| !(0.0..1.0).contains(&b)) {
            return Err(DiffusionError::BadSchedule(
                "betas must lie in (0, 1)".into(),
            ));
        }
        let alphas: Vec<f64> = betas.iter().map(|b| 1.0 - b).collect();
        let mut alpha_bars = Vec::with_capacity(betas.len());
        let mut prod = 1.0;
        for a in &alphas {
            prod *= a;
            alpha_bars.push(prod);
        }
        for w in alpha_bars.windows(2) {
            if w[1] >= w[0] {
                return Err(DiffusionError::BadSchedule(
                    "alpha_bar must be strictly decreasing".into(),
                ));
            }
        }
        let terminal = *alpha_bars.last().unwrap();
        if terminal >= TERMINAL_SIGNAL {
            return Err(DiffusionError::BadSchedule(format!(
                "alpha_bar(T) = {terminal:.3e} >= {TERMINAL_SIGNAL:.0e}; x_T is not close to pure noise"
            )));
        }
        let posterior_var = (0..betas.len())
            .map(|i| {
                let ab_prev = if i == 0 { 1.0 } else { alpha_bars[i - 1] };
                betas[i] * (1.0 - ab_prev) / (1.0 - alpha_bars[i])
            })
            .collect();
        Ok(NoiseSchedule {
            betas,
            alphas,
            alpha_bars,
            posterior_var,
        })
    }

    pub fn timesteps(&self) -> usize {
        self.betas.len()
    }

    /// 1-based accessors matching the t = 1..=T convention.
    pub fn beta(&self, t: usize) -> f64 {
        self.betas[t - 1]
    }

    pub fn alpha(&self, t: usize) -> f64 {
        self.alphas[t - 1]
    }

    pub fn alpha_bar(&self, t: usize) -> f64 {
        self.alpha_bars[t - 1]
    }

    /// Reverse-step standard deviation sigma_t (zero at t = 1).
    pub fn sigma(&self, t: usize) -> f64 {
        self.posterior_var[t - 1].max(0.0).sqrt()
    }

    /// Coefficients (on predicted x0, on x_t) of the posterior mean
    /// of q(x_{t-1} | x_t, x0).
    pub fn posterior_mean_coeffs(&self, t: usize) -> (f64, f64) {
        let ab = self.alpha_bar(t);
        let ab_prev = if t == 1 { 1.0 } else { self.alpha_bar(t - 1) };
        let c0 = ab_prev.sqrt() * self.beta(t) / (1.0 - ab);
        let ct = self.alpha(t).sqrt() * (1.0 - ab_prev) / (1.0 - ab);
        (c0, ct)
    }
}

fn linear_betas(t: usize) -> Vec<f64> {
    if t == 1 {
        return vec![0.9999];
    }
    // The classic 1e-4..0.02 ramp is calibrated for T = 1000; rescale for
    // other horizons and clamp into a sane open interval.
    let scale = 1000.0 / t as f64;
    let (b0, b1) = (1e-4 * scale, 0.02 * scale);
    (0..t)
        .map(|i| {
            let f = i as f64 / (t - 1) as f64;
            (b0 + (b1 - b0) * f).clamp(1e-6, 0.999)
        })
        .collect()
}

fn cosine_betas(t: usize) -> Vec<f64> {
    let s = 0.008;
    let f = |x: f64| ((x / t as f64 + s) / (1.0 + s) * std::f64::consts::FRAC_PI_2)
        .cos()
        .powi(2);
    let f0 = f(0.0);
    (1..=t)
        .map(|i| {
            let ab = f(i as f64) / f0;
            let ab_prev = f((i - 1) as f64) / f0;
            (1.0 - ab / ab_prev).clamp(1e-6, 0.999)
        })
        .collect()
}

/// Closed-form forward process: x_t = sqrt(ab_t)·x0 + sqrt(1-ab_t)·noise.
pub fn q_sample(x0: &Tensor, t: usize, noise: &Tensor, schedule: &NoiseSchedule) -> Tensor {
    debug_assert_eq!(x0.shape(), noise.shape());
    let ab = schedule.alpha_bar(t);
    let (sa, sb) = (ab.sqrt(), (1.0 - ab).sqrt());
    let data = x0
        .data()
        .iter()
        .zip(noise.data())
        .map(|(x, n)| sa * x + sb * n)
        .collect();
    Tensor::from_vec(x0.rows(), x0.cols(), data)
}

/// Standard-normal noise tensor.
pub fn gaussian_like(rows: usize, cols: usize, rng: &mut impl Rng) -> Tensor {
    Tensor::randn(rows, cols, 1.0, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn linear_1000_reaches_pure_noise() {
        let s = NoiseSchedule::make(1000, ScheduleKind::Linear).unwrap();
        // Direct product oracle.
        let prod: f64 = (0..1000)
            .map(|i| 1.0 - (1e-4 + (0.02 - 1e-4) * i as f64 / 999.0))
            .product();
        assert!((s.alpha_bar(1000) - prod).abs() < 1e-12);
        assert!(s.alpha_bar(1000) < 1e-3);
    }

    #[test]
    fn small_horizons_still_terminate() {
        for t in [1usize, 2, 10, 50, 100] {
            let s = NoiseSchedule::make(t, ScheduleKind::Linear).unwrap();
            assert!(s.alpha_bar(t) < 1e-3, "T={t}");
            let c = NoiseSchedule::make(t.max(2), ScheduleKind::Cosine).unwrap();
            assert!(c.alpha_bar(t.max(2)) < 1e-3, "cosine T={t}");
        }
    }

    #[test]
    fn alpha_bars_strictly_decrease() {
        for kind in [ScheduleKind::Linear, ScheduleKind::Cosine] {
            let s = NoiseSchedule::make(64, kind).unwrap();
            for t in 2..=64 {
                assert!(s.alpha_bar(t) < s.alpha_bar(t - 1));
            }
        }
    }

    #[test]
    fn bad_schedules_are_rejected() {
        // Too little noise overall.
        assert!(NoiseSchedule::from_betas(vec![1e-5; 10]).is_err());
        assert!(NoiseSchedule::from_betas(vec![1.5]).is_err());
    }

    #[test]
    fn q_sample_noise_free_at_t1() {
        let s = NoiseSchedule::make(100, ScheduleKind::Linear).unwrap();
        let x0 = Tensor::from_vec(1, 3, vec![1.0, -2.0, 0.5]);
        let zero = Tensor::zeros(1, 3);
        let xt = q_sample(&x0, 1, &zero, &s);
        let sa = s.alpha_bar(1).sqrt();
        for (a, b) in xt.data().iter().zip(x0.data()) {
            assert_eq!(*a, sa * b);
        }
    }

    #[test]
    fn terminal_distribution_is_standard_normal() {
        // Monte-Carlo check of the t→T limit.
        let s = NoiseSchedule::make(100, ScheduleKind::Linear).unwrap();
        let x0 = Tensor::from_vec(1, 4, vec![3.0, -1.0, 0.25, 2.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let draws = 10_000;
        let mut sums = vec![0.0; 4];
        let mut sqs = vec![0.0; 4];
        for _ in 0..draws {
            let noise = gaussian_like(1, 4, &mut rng);
            let xt = q_sample(&x0, 100, &noise, &s);
            for (k, v) in xt.data().iter().enumerate() {
                sums[k] += v;
                sqs[k] += v * v;
            }
        }
        for k in 0..4 {
            let mean = sums[k] / draws as f64;
            let var = sqs[k] / draws as f64 - mean * mean;
            assert!(mean.abs() < 0.05, "channel {k} mean {mean}");
            assert!((0.9..=1.1).contains(&var), "channel {k} var {var}");
        }
    }

    #[test]
    fn intermediate_variance_matches_one_minus_alpha_bar() {
        let s = NoiseSchedule::make(100, ScheduleKind::Linear).unwrap();
        let x0 = Tensor::scalar(0.7);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = 40;
        let draws = 20_000;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..draws {
            let xt = q_sample(&x0, t, &gaussian_like(1, 1, &mut rng), &s).item();
            sum += xt;
            sq += xt * xt;
        }
        let mean = sum / draws as f64;
        let var = sq / draws as f64 - mean * mean;
        let expected = 1.0 - s.alpha_bar(t);
        assert!(
            (var - expected).abs() / expected < 0.02,
            "var {var} vs {expected}"
        );
    }
}
