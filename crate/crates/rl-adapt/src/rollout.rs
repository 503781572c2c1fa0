//! Rollout collection over an environment ensemble and the training driver.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tensor_autodiff::AdamState;

use crate::env::TrackingEnv;
use crate::error::RlError;
use crate::gae::gae;
use crate::policy::Policy;
use crate::ppo::{ppo_update, PpoConfig};

/// Transitions gathered from one environment over one iteration window.
#[derive(Debug, Clone, Default)]
pub struct EnvTrajectory {
    pub obs: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub dones: Vec<bool>,
    pub bootstrap: f64,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

/// All trajectories of one iteration.
#[derive(Debug, Clone, Default)]
pub struct TransitionBatch {
    pub trajectories: Vec<EnvTrajectory>,
    /// Lengths of episodes that finished during collection.
    pub finished_episodes: Vec<usize>,
}

impl TransitionBatch {
    pub fn total_steps(&self) -> usize {
        self.trajectories.iter().map(|t| t.rewards.len()).sum()
    }

    pub fn mean_reward(&self) -> f64 {
        let n = self.total_steps();
        if n == 0 {
            return 0.0;
        }
        self.trajectories
            .iter()
            .flat_map(|t| &t.rewards)
            .sum::<f64>()
            / n as f64
    }

    /// Fill advantages and returns for every trajectory.
    pub fn compute_gae(&mut self, gamma: f64, lambda: f64) -> Result<(), RlError> {
        for t in &mut self.trajectories {
            let (a, r) = gae(&t.rewards, &t.values, &t.dones, t.bootstrap, gamma, lambda)?;
            t.advantages = a;
            t.returns = r;
        }
        Ok(())
    }
}

/// Collect `horizon` transitions from every environment. Environments keep
/// their state between calls; episodes reset where they end. Actions are
/// mean + σ·ε, or the mean exactly when `deterministic`.
pub fn rollout(
    policy: &Policy,
    envs: &mut [TrackingEnv],
    horizon: usize,
    rng: &mut ChaCha8Rng,
    deterministic: bool,
) -> Result<TransitionBatch, RlError> {
    let mut batch = TransitionBatch::default();
    for env in envs.iter_mut() {
        let mut traj = EnvTrajectory::default();
        for _ in 0..horizon {
            let obs = env.observe()?;
            let mean = policy.act_mean(&obs.data)?;
            let action: Vec<f64> = if deterministic {
                mean.clone()
            } else {
                mean.iter()
                    .map(|m| {
                        let eps: f64 = sample_standard_normal(rng);
                        m + policy.sigma * eps
                    })
                    .collect()
            };
            let log_prob = policy.log_prob(&mean, &action);
            let value = policy.value(&obs.data)?;
            let outcome = env.step(&action)?;

            traj.obs.push(obs.data);
            traj.actions.push(action);
            traj.log_probs.push(log_prob);
            traj.rewards.push(outcome.reward.total);
            traj.values.push(value);
            traj.dones.push(outcome.done);
            if outcome.done {
                batch.finished_episodes.push(env.episode_steps());
                env.reset();
            }
        }
        let last_obs = env.observe()?;
        traj.bootstrap = policy.value(&last_obs.data)?;
        batch.trajectories.push(traj);
    }
    Ok(batch)
}

fn sample_standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; one value per call keeps the stream simple and seedable.
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// One line of the training log.
#[derive(Debug, Clone, Copy)]
pub struct TrainRecord {
    pub iteration: usize,
    pub mean_reward: f64,
    pub mean_episode_len: f64,
    pub actor_loss: f64,
    pub value_loss: f64,
}

/// PPO training loop: rollout, GAE, update; one record per iteration.
pub fn train_controller(
    policy: &mut Policy,
    envs: &mut [TrackingEnv],
    iterations: usize,
    horizon: usize,
    cfg: &PpoConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<TrainRecord>, RlError> {
    let mut adam = AdamState::new();
    let mut records = Vec::with_capacity(iterations);
    for iteration in 0..iterations {
        let mut batch = rollout(policy, envs, horizon, rng, false)?;
        batch.compute_gae(cfg.gamma, cfg.lambda)?;
        let report = ppo_update(policy, &batch, cfg, &mut adam, rng)?;
        let mean_episode_len = if batch.finished_episodes.is_empty() {
            horizon as f64
        } else {
            batch.finished_episodes.iter().sum::<usize>() as f64
                / batch.finished_episodes.len() as f64
        };
        records.push(TrainRecord {
            iteration,
            mean_reward: batch.mean_reward(),
            mean_episode_len,
            actor_loss: report.actor_loss,
            value_loss: report.value_loss,
        });
    }
    Ok(records)
}

/// CSV training log: iteration, mean reward, episode length, losses.
pub fn train_log_csv(records: &[TrainRecord]) -> String {
    let mut out = String::from("iteration,mean_reward,episode_length,actor_loss,value_loss\n");
    for r in records {
        out.push_str(&format!(
            "{},{:.6},{:.3},{:.6},{:.6}\n",
            r.iteration, r.mean_reward, r.mean_episode_len, r.actor_loss, r.value_loss
        ));
    }
    out
}
