//! Adam with bias correction.

use std::collections::BTreeMap;

use crate::params::Params;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            ..AdamConfig::default()
        }
    }
}

/// First/second moment estimates per parameter plus the step counter.
#[derive(Debug, Clone, Default)]
pub struct AdamState {
    m: BTreeMap<String, Tensor>,
    v: BTreeMap<String, Tensor>,
    step: u64,
}

impl AdamState {
    pub fn new() -> Self {
        AdamState::default()
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update. Parameters without a gradient this step
/// are left untouched. Iteration order is the sorted parameter order, so
/// repeated runs are bitwise identical.
pub fn adam_step(
    params: &mut Params,
    grads: &BTreeMap<String, Tensor>,
    state: &mut AdamState,
    cfg: &AdamConfig,
) {
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    for (name, p) in params.iter_mut() {
        let Some(gr) = grads.get(name) else {
            continue;
        };
        debug_assert_eq!(p.shape(), gr.shape(), "gradient shape for {name}");
        let m = state
            .m
            .entry(name.clone())
            .or_insert_with(|| Tensor::zeros(p.rows(), p.cols()));
        let v = state
            .v
            .entry(name.clone())
            .or_insert_with(|| Tensor::zeros(p.rows(), p.cols()));
        let pd = p.data_mut();
        for i in 0..pd.len() {
            let g = gr.data()[i];
            let mi = cfg.beta1 * m.data()[i] + (1.0 - cfg.beta1) * g;
            let vi = cfg.beta2 * v.data()[i] + (1.0 - cfg.beta2) * g * g;
            m.data_mut()[i] = mi;
            v.data_mut()[i] = vi;
            let mhat = mi / bc1;
            let vhat = vi / bc2;
            pd[i] -= cfg.lr * mhat / (vhat.sqrt() + cfg.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut params = Params::new();
        params.insert("w", Tensor::from_vec(1, 2, vec![1.0, -2.0]));
        let mut grads = BTreeMap::new();
        grads.insert("w".to_string(), Tensor::zeros(1, 2));
        let mut state = AdamState::new();
        adam_step(&mut params, &grads, &mut state, &AdamConfig::with_lr(0.1));
        assert_eq!(params.get("w").unwrap().data(), &[1.0, -2.0]);
    }

    #[test]
    fn single_step_matches_hand_evaluation() {
        // One scalar, g = 1, lr = 0.1:
        //   m = 0.1·g = 0.1, v = 0.001·g² = 0.001
        //   m̂ = m / (1-0.9) = 1, v̂ = v / (1-0.999) = 1
        //   θ' = θ - lr·m̂/(√v̂+eps) = 2 - 0.1·1/(1+1e-8)
        let mut params = Params::new();
        params.insert("w", Tensor::scalar(2.0));
        let mut grads = BTreeMap::new();
        grads.insert("w".to_string(), Tensor::scalar(1.0));
        let mut state = AdamState::new();
        adam_step(&mut params, &grads, &mut state, &AdamConfig::with_lr(0.1));
        let expected = 2.0 - 0.1 * 1.0 / (1.0 + 1e-8);
        let got = params.get("w").unwrap().item();
        assert!((got - expected).abs() < 1e-15, "{got} vs {expected}");
    }

    #[test]
    fn updates_are_deterministic() {
        let run = || {
            let mut params = Params::new();
            params.insert("w", Tensor::from_vec(1, 3, vec![0.5, -0.5, 2.0]));
            let mut state = AdamState::new();
            for step in 0..25 {
                let mut grads = BTreeMap::new();
                grads.insert(
                    "w".to_string(),
                    Tensor::from_vec(1, 3, vec![0.1 * step as f64, -0.2, 0.05]),
                );
                adam_step(&mut params, &grads, &mut state, &AdamConfig::default());
            }
            params.get("w").unwrap().data().to_vec()
        };
        assert_eq!(run(), run());
    }
}
