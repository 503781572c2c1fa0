//! Actor-critic MLPs with a fixed-diagonal Gaussian action distribution.

use std::path::Path;

use rand::Rng;
use tensor_autodiff::{
    bind, linear, load_checkpoint, save_checkpoint, AdError, Bound, Graph, NodeId, Params, Tensor,
};

use crate::error::RlError;

/// Actor and value networks plus the fixed action standard deviation.
#[derive(Debug, Clone)]
pub struct Policy {
    pub params: Params,
    pub obs_dim: usize,
    pub act_dim: usize,
    pub hidden: Vec<usize>,
    pub sigma: f64,
}

impl Policy {
    pub fn new(
        obs_dim: usize,
        act_dim: usize,
        hidden: &[usize],
        sigma: f64,
        rng: &mut impl Rng,
    ) -> Self {
        let mut params = Params::new();
        for head in ["actor", "critic"] {
            let mut prev = obs_dim;
            for (i, &h) in hidden.iter().enumerate() {
                params.init_linear(&format!("{head}.l{i}"), prev, h, rng);
                prev = h;
            }
            let out = if head == "actor" { act_dim } else { 1 };
            params.init_linear(&format!("{head}.out"), prev, out, rng);
            // Small final layer keeps initial actions near zero.
            if let Ok(w) = params.get_mut(&format!("{head}.out.w")) {
                for v in w.data_mut() {
                    *v *= 0.01;
                }
            }
        }
        Policy {
            params,
            obs_dim,
            act_dim,
            hidden: hidden.to_vec(),
            sigma,
        }
    }

    fn mlp(
        &self,
        g: &mut Graph,
        bound: &Bound,
        head: &str,
        obs: NodeId,
    ) -> Result<NodeId, AdError> {
        let mut x = obs;
        for i in 0..self.hidden.len() {
            x = linear(g, x, bound, &format!("{head}.l{i}"))?;
            x = g.relu(x);
        }
        linear(g, x, bound, &format!("{head}.out"))
    }

    pub fn actor_mean_graph(
        &self,
        g: &mut Graph,
        bound: &Bound,
        obs: NodeId,
    ) -> Result<NodeId, AdError> {
        self.mlp(g, bound, "actor", obs)
    }

    pub fn value_graph(&self, g: &mut Graph, bound: &Bound, obs: NodeId) -> Result<NodeId, AdError> {
        self.mlp(g, bound, "critic", obs)
    }

    /// Deterministic action (the Gaussian mean).
    pub fn act_mean(&self, obs: &[f64]) -> Result<Vec<f64>, RlError> {
        let mut g = Graph::new();
        let bound = bind(&mut g, &self.params);
        let o = g.constant(Tensor::row_vec(obs.to_vec()));
        let mu = self.actor_mean_graph(&mut g, &bound, o)?;
        Ok(g.value(mu).data().to_vec())
    }

    pub fn value(&self, obs: &[f64]) -> Result<f64, RlError> {
        let mut g = Graph::new();
        let bound = bind(&mut g, &self.params);
        let o = g.constant(Tensor::row_vec(obs.to_vec()));
        let v = self.value_graph(&mut g, &bound, o)?;
        Ok(g.value(v).item())
    }

    /// Log density of `action` under N(mean, σ²I), dropping the additive
    /// constant (it cancels in every PPO ratio).
    pub fn log_prob(&self, mean: &[f64], action: &[f64]) -> f64 {
        let inv = 1.0 / (2.0 * self.sigma * self.sigma);
        -mean
            .iter()
            .zip(action)
            .map(|(m, a)| (a - m) * (a - m))
            .sum::<f64>()
            * inv
    }

    pub fn save(&self, path: &Path) -> Result<(), RlError> {
        let mut all = self.params.clone();
        let mut meta = vec![
            self.obs_dim as f64,
            self.act_dim as f64,
            self.sigma,
            self.hidden.len() as f64,
        ];
        meta.extend(self.hidden.iter().map(|&h| h as f64));
        all.insert("_meta", Tensor::row_vec(meta));
        save_checkpoint(&all, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, RlError> {
        let all = load_checkpoint(path)?;
        let meta = all.get("_meta")?.data().to_vec();
        let hidden_len = meta[3] as usize;
        let hidden: Vec<usize> = meta[4..4 + hidden_len].iter().map(|&v| v as usize).collect();
        let mut params = Params::new();
        for (name, t) in all.iter() {
            if !name.starts_with('_') {
                params.insert(name.clone(), t.clone());
            }
        }
        Ok(Policy {
            params,
            obs_dim: meta[0] as usize,
            act_dim: meta[1] as usize,
            hidden,
            sigma: meta[2],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shapes_and_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = Policy::new(10, 3, &[16, 8], 0.05, &mut rng);
        let obs = vec![0.1; 10];
        let a = p.act_mean(&obs).unwrap();
        assert_eq!(a.len(), 3);
        let v = p.value(&obs).unwrap();
        assert!(v.is_finite());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("policy.ckpt");
        p.save(&path).unwrap();
        let q = Policy::load(&path).unwrap();
        assert_eq!(q.obs_dim, 10);
        assert_eq!(q.hidden, vec![16, 8]);
        assert_eq!(q.act_mean(&obs).unwrap(), a);
    }

    #[test]
    fn log_prob_peaks_at_the_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = Policy::new(4, 2, &[8], 0.05, &mut rng);
        let mean = vec![0.3, -0.2];
        assert_eq!(p.log_prob(&mean, &mean), 0.0);
        assert!(p.log_prob(&mean, &[0.4, -0.2]) < 0.0);
    }
}
