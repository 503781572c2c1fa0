//! Central-difference validation of backward passes.

use crate::error::AdError;
use crate::graph::{Graph, NodeId};
use crate::tensor::Tensor;

/// Outcome of a gradient check.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// Worst relative error over all checked elements.
    pub max_rel_err: f64,
    /// Elements compared against central differences.
    pub checked: usize,
    /// Elements skipped because the function is locally non-smooth there
    /// (e.g. a relu kink straddles the probe interval).
    pub excluded: usize,
}

/// Compare analytic gradients of a scalar-valued builder against central
/// differences at `inputs`.
///
/// `build` receives a fresh graph plus leaf ids for each input and returns
/// the scalar output node. Elements where the left and right one-sided
/// differences disagree are flagged as non-differentiable and excluded from
/// the report rather than counted as failures.
pub fn grad_check<F>(build: F, inputs: &[Tensor], h: f64) -> Result<GradCheckReport, AdError>
where
    F: Fn(&mut Graph, &[NodeId]) -> Result<NodeId, AdError>,
{
    // Analytic gradients at the base point.
    let mut g = Graph::new();
    let ids: Vec<NodeId> = inputs.iter().map(|t| g.leaf(t.clone())).collect();
    let out = build(&mut g, &ids)?;
    let f0 = g.value(out).item();
    g.backward(out)?;
    let analytic: Vec<Tensor> = ids
        .iter()
        .zip(inputs)
        .map(|(&id, t)| {
            g.grad(id)
                .cloned()
                .unwrap_or_else(|| Tensor::zeros(t.rows(), t.cols()))
        })
        .collect();

    let eval = |probe: &[Tensor]| -> Result<f64, AdError> {
        let mut g = Graph::new();
        let ids: Vec<NodeId> = probe.iter().map(|t| g.constant(t.clone())).collect();
        let out = build(&mut g, &ids)?;
        Ok(g.value(out).item())
    };

    let mut max_rel_err = 0.0f64;
    let mut checked = 0usize;
    let mut excluded = 0usize;
    let mut probe: Vec<Tensor> = inputs.to_vec();
    for (ti, t) in inputs.iter().enumerate() {
        for k in 0..t.len() {
            let orig = t.data()[k];
            probe[ti].data_mut()[k] = orig + h;
            let fp = eval(&probe)?;
            probe[ti].data_mut()[k] = orig - h;
            let fm = eval(&probe)?;
            probe[ti].data_mut()[k] = orig;

            let central = (fp - fm) / (2.0 * h);
            let right = (fp - f0) / h;
            let left = (f0 - fm) / h;
            let scale = 1.0 + right.abs().max(left.abs());
            if (right - left).abs() > 1e-3 * scale {
                // One-sided slopes disagree: a kink sits inside [x-h, x+h].
                excluded += 1;
                continue;
            }
            let a = analytic[ti].data()[k];
            let denom = a.abs().max(central.abs()).max(1e-4);
            let rel = (a - central).abs() / denom;
            max_rel_err = max_rel_err.max(rel);
            checked += 1;
        }
    }
    Ok(GradCheckReport {
        max_rel_err,
        checked,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_form_is_exact() {
        // f(x) = sum(x∘x) + 3·sum(x): gradient 2x + 3.
        let x = Tensor::from_vec(2, 2, vec![0.5, -1.2, 2.0, 0.3]);
        let report = grad_check(
            |g, ids| {
                let sq = g.mul(ids[0], ids[0])?;
                let s1 = g.sum_all(sq);
                let s2 = g.sum_all(ids[0]);
                let s2 = g.scale(s2, 3.0);
                g.add(s1, s2)
            },
            &[x],
            1e-5,
        )
        .unwrap();
        assert_eq!(report.excluded, 0);
        assert!(report.max_rel_err < 1e-7, "{}", report.max_rel_err);
    }

    #[test]
    fn relu_kink_is_flagged_and_excluded() {
        // One element exactly at the kink.
        let x = Tensor::from_vec(1, 3, vec![1.0, 0.0, -2.0]);
        let report = grad_check(
            |g, ids| {
                let r = g.relu(ids[0]);
                Ok(g.sum_all(r))
            },
            &[x],
            1e-5,
        )
        .unwrap();
        assert_eq!(report.excluded, 1);
        assert_eq!(report.checked, 2);
        assert!(report.max_rel_err < 1e-8);
    }
}
