//! Clipped-surrogate PPO update with a shared Adam step for actor and
//! critic.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tensor_autodiff::{adam_step, bind, AdamConfig, AdamState, Graph, Tensor};

use crate::error::RlError;
use crate::policy::Policy;
use crate::rollout::TransitionBatch;

#[derive(Debug, Clone, Copy)]
pub struct PpoConfig {
    pub clip: f64,
    pub lr: f64,
    pub epochs: usize,
    pub minibatch: usize,
    pub gamma: f64,
    pub lambda: f64,
    pub value_coef: f64,
    /// Normalize advantages to zero mean / unit variance per update.
    pub normalize_advantages: bool,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            clip: 0.2,
            lr: 1e-4,
            epochs: 4,
            minibatch: 64,
            gamma: 0.99,
            lambda: 0.95,
            value_coef: 0.5,
            normalize_advantages: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PpoReport {
    pub actor_loss: f64,
    pub value_loss: f64,
    /// Mean probability ratio of the very first evaluated minibatch; equals
    /// 1 before any parameter movement.
    pub initial_mean_ratio: f64,
}

struct FlatBatch {
    obs: Vec<Vec<f64>>,
    actions: Vec<Vec<f64>>,
    log_probs: Vec<f64>,
    advantages: Vec<f64>,
    returns: Vec<f64>,
}

fn flatten(batch: &TransitionBatch, normalize: bool) -> Result<FlatBatch, RlError> {
    let mut flat = FlatBatch {
        obs: Vec::new(),
        actions: Vec::new(),
        log_probs: Vec::new(),
        advantages: Vec::new(),
        returns: Vec::new(),
    };
    for t in &batch.trajectories {
        if t.advantages.len() != t.rewards.len() {
            return Err(RlError::LengthMismatch(
                "advantages missing; call compute_gae first".into(),
            ));
        }
        flat.obs.extend(t.obs.iter().cloned());
        flat.actions.extend(t.actions.iter().cloned());
        flat.log_probs.extend_from_slice(&t.log_probs);
        flat.advantages.extend_from_slice(&t.advantages);
        flat.returns.extend_from_slice(&t.returns);
    }
    if normalize && !flat.advantages.is_empty() {
        let n = flat.advantages.len() as f64;
        let mean = flat.advantages.iter().sum::<f64>() / n;
        let var = flat
            .advantages
            .iter()
            .map(|a| (a - mean) * (a - mean))
            .sum::<f64>()
            / n;
        let std = var.sqrt().max(1e-8);
        for a in &mut flat.advantages {
            *a = (*a - mean) / std;
        }
    }
    Ok(flat)
}

/// One PPO update over the batch: clipped surrogate + value regression.
pub fn ppo_update(
    policy: &mut Policy,
    batch: &TransitionBatch,
    cfg: &PpoConfig,
    adam: &mut AdamState,
    rng: &mut ChaCha8Rng,
) -> Result<PpoReport, RlError> {
    let flat = flatten(batch, cfg.normalize_advantages)?;
    let n = flat.obs.len();
    if n == 0 {
        return Ok(PpoReport::default());
    }
    let obs_dim = policy.obs_dim;
    let act_dim = policy.act_dim;
    let inv_two_sigma_sq = 1.0 / (2.0 * policy.sigma * policy.sigma);

    let mut report = PpoReport::default();
    let mut first_minibatch = true;
    let mut indices: Vec<usize> = (0..n).collect();
    for _ in 0..cfg.epochs {
        // Fisher-Yates shuffle from the training stream.
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            indices.swap(i, j);
        }
        for chunk in indices.chunks(cfg.minibatch.max(1)) {
            let b = chunk.len();
            let mut obs = Vec::with_capacity(b * obs_dim);
            let mut act = Vec::with_capacity(b * act_dim);
            let mut lp_old = Vec::with_capacity(b);
            let mut adv = Vec::with_capacity(b);
            let mut ret = Vec::with_capacity(b);
            for &i in chunk {
                obs.extend_from_slice(&flat.obs[i]);
                act.extend_from_slice(&flat.actions[i]);
                lp_old.push(flat.log_probs[i]);
                adv.push(flat.advantages[i]);
                ret.push(flat.returns[i]);
            }

            let mut g = Graph::new();
            let bound = bind(&mut g, &policy.params);
            let obs_node = g.constant(Tensor::from_vec(b, obs_dim, obs));
            let act_node = g.constant(Tensor::from_vec(b, act_dim, act));
            let mu = policy.actor_mean_graph(&mut g, &bound, obs_node)?;

            // log π(a|s) up to the constant: −‖a−μ‖² / (2σ²), per row.
            let diff = g.sub(act_node, mu)?;
            let sq = g.mul(diff, diff)?;
            let sums = g.row_sums(sq);
            let logp_new = g.scale(sums, -inv_two_sigma_sq);
            let lp_old_node = g.constant(Tensor::col_vec(lp_old));
            let delta = g.sub(logp_new, lp_old_node)?;
            let ratio = g.exp(delta);

            if first_minibatch {
                report.initial_mean_ratio =
                    g.value(ratio).data().iter().sum::<f64>() / b as f64;
                first_minibatch = false;
            }

            let adv_node = g.constant(Tensor::col_vec(adv));
            let surr1 = g.mul(ratio, adv_node)?;
            let clipped = g.clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip);
            let surr2 = g.mul(clipped, adv_node)?;
            let surr = g.minimum(surr1, surr2)?;
            let mean_surr = g.mean_all(surr);
            let actor_loss = g.neg(mean_surr);

            let v = policy.value_graph(&mut g, &bound, obs_node)?;
            let ret_node = g.constant(Tensor::col_vec(ret));
            let vdiff = g.sub(v, ret_node)?;
            let vsq = g.mul(vdiff, vdiff)?;
            let value_loss = g.mean_all(vsq);

            let scaled_v = g.scale(value_loss, cfg.value_coef);
            let total = g.add(actor_loss, scaled_v)?;
            g.backward(total)?;

            report.actor_loss = g.value(actor_loss).item();
            report.value_loss = g.value(value_loss).item();

            let grads = bound.grads(&g);
            adam_step(&mut policy.params, &grads, adam, &AdamConfig::with_lr(cfg.lr));
        }
    }
    Ok(report)
}
