//! Generalized Advantage Estimation.

use crate::error::RlError;

/// Standard GAE recursion over one trajectory segment.
///
/// `values[t]` is V(s_t); `bootstrap` is V of the state after the last
/// transition (ignored when that transition ended an episode). Returns
/// (advantages, returns) with returns = advantages + values.
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap: f64,
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>), RlError> {
    let t = rewards.len();
    if values.len() != t || dones.len() != t {
        return Err(RlError::LengthMismatch(format!(
            "rewards {} / values {} / dones {}",
            t,
            values.len(),
            dones.len()
        )));
    }
    let mut advantages = vec![0.0; t];
    let mut acc = 0.0;
    for i in (0..t).rev() {
        let not_done = if dones[i] { 0.0 } else { 1.0 };
        let next_value = if i + 1 < t { values[i + 1] } else { bootstrap };
        let delta = rewards[i] + gamma * next_value * not_done - values[i];
        acc = delta + gamma * lambda * not_done * acc;
        advantages[i] = acc;
    }
    let returns = advantages.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((advantages, returns))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn undiscounted_constant_rewards() {
        // Hand recursion: r=1, V=0, γ=λ=1, length 3 → [3, 2, 1].
        let (a, ret) = gae(&[1.0; 3], &[0.0; 3], &[false; 3], 0.0, 1.0, 1.0).unwrap();
        assert_eq!(a, vec![3.0, 2.0, 1.0]);
        assert_eq!(ret, a);
    }

    #[test]
    fn lambda_zero_gives_td_errors() {
        let rewards = [0.5, -0.2, 1.0];
        let values = [0.3, 0.1, -0.4];
        let gamma = 0.9;
        let (a, _) = gae(&rewards, &values, &[false; 3], 0.7, gamma, 0.0).unwrap();
        let expected = [
            0.5 + gamma * 0.1 - 0.3,
            -0.2 + gamma * -0.4 - 0.1,
            1.0 + gamma * 0.7 + 0.4,
        ];
        for (x, y) in a.iter().zip(&expected) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn zeros_stay_zero() {
        let (a, ret) = gae(&[0.0; 5], &[0.0; 5], &[false; 5], 0.0, 0.99, 0.95).unwrap();
        assert!(a.iter().all(|&v| v == 0.0));
        assert!(ret.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn lambda_one_equals_monte_carlo_on_finished_episodes() {
        // Brute-force oracle: A_t = Σ_{k>=t} γ^{k-t} r_k − V_t for episodes
        // that end inside the window.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for gamma in [1.0, 0.9, 0.5] {
            for len in 1..=10usize {
                let rewards: Vec<f64> = (0..len).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
                let values: Vec<f64> = (0..len).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
                let mut dones = vec![false; len];
                dones[len - 1] = true;
                let (a, _) = gae(&rewards, &values, &dones, 123.0, gamma, 1.0).unwrap();
                for t in 0..len {
                    let mut mc = 0.0;
                    let mut disc = 1.0;
                    for k in t..len {
                        mc += disc * rewards[k];
                        disc *= gamma;
                    }
                    let expected = mc - values[t];
                    assert!(
                        (a[t] - expected).abs() < 1e-10,
                        "γ={gamma} len={len} t={t}: {} vs {expected}",
                        a[t]
                    );
                }
            }
        }
    }

    #[test]
    fn length_mismatch_is_rejected() {
        assert!(gae(&[1.0], &[0.0, 0.0], &[false], 0.0, 0.99, 0.95).is_err());
    }
}
