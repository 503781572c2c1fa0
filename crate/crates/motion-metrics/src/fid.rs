//! Fréchet distance between Gaussian fits of per-frame latents.
//!
//! The matrix square root of the covariance product is taken through the
//! symmetric form Σ^{1/2} Σ̂ Σ^{1/2}, whose eigendecomposition is real and
//! non-negative up to roundoff.

use nalgebra::DMatrix;

use motion_core::MotionClip;

use crate::autoenc::{latent_stats, LatentEncoder};
use crate::MetricsError;

const EIG_TOL: f64 = -1e-8;
const RIDGE: f64 = 1e-6;
const COND_LIMIT: f64 = 1e12;

/// K-FID between generated and reference clips: encode every frame of both
/// sides, fit Gaussians, return the Fréchet distance.
pub fn k_fid(
    generated: &[MotionClip],
    reference: &[MotionClip],
    encoder: &LatentEncoder,
) -> Result<f64, MetricsError> {
    let enc_all = |clips: &[MotionClip]| -> Result<Vec<Vec<f64>>, MetricsError> {
        let mut out = Vec::new();
        for c in clips {
            out.extend(encoder.encode_clip(c)?);
        }
        Ok(out)
    };
    let a = enc_all(generated)?;
    let b = enc_all(reference)?;
    frechet_distance(&a, &b)
}

/// Fréchet distance between the Gaussian fits of two latent samples:
/// ‖μ−μ̂‖² + tr(Σ + Σ̂ − 2(ΣΣ̂)^{1/2}).
pub fn frechet_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64, MetricsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(MetricsError::EmptyDataset);
    }
    let (mu_a, mut cov_a) = latent_stats(a);
    let (mu_b, mut cov_b) = latent_stats(b);
    ridge_if_needed(&mut cov_a);
    ridge_if_needed(&mut cov_b);

    let mean_term: f64 = mu_a
        .iter()
        .zip(&mu_b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum();

    let sqrt_a = sym_sqrt(&cov_a)?;
    let inner = &sqrt_a * &cov_b * &sqrt_a;
    let tr_sqrt = sym_sqrt_trace(&inner)?;
    let fid = mean_term + cov_a.trace() + cov_b.trace() - 2.0 * tr_sqrt;
    // Tiny negatives are pure roundoff.
    Ok(fid.max(0.0))
}

fn ridge_if_needed(cov: &mut DMatrix<f64>) {
    let eig = cov.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let min = eig
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |m, &v| m.min(v.abs()));
    if max <= 0.0 || min <= 0.0 || max / min > COND_LIMIT {
        for i in 0..cov.nrows() {
            cov[(i, i)] += RIDGE;
        }
    }
}

/// Symmetric PSD square root via eigendecomposition.
fn sym_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>, MetricsError> {
    let eig = m.clone().symmetric_eigen();
    let mut vals = eig.eigenvalues.clone();
    for v in vals.iter_mut() {
        if *v < EIG_TOL {
            return Err(MetricsError::SingularCovariance(format!(
                "negative eigenvalue {v:.3e}"
            )));
        }
        *v = v.max(0.0).sqrt();
    }
    let q = eig.eigenvectors;
    Ok(&q * DMatrix::from_diagonal(&vals) * q.transpose())
}

/// Trace of the symmetric PSD square root (skips rebuilding the matrix).
fn sym_sqrt_trace(m: &DMatrix<f64>) -> Result<f64, MetricsError> {
    let eig = m.clone().symmetric_eigen();
    let mut acc = 0.0;
    for &v in eig.eigenvalues.iter() {
        if v < EIG_TOL {
            return Err(MetricsError::SingularCovariance(format!(
                "negative eigenvalue {v:.3e} in product"
            )));
        }
        acc += v.max(0.0).sqrt();
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_sets_score_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..4).map(|_| rng.random::<f64>()).collect())
            .collect();
        let d = frechet_distance(&x, &x).unwrap();
        assert!(d < 1e-6, "self distance {d}");
    }

    #[test]
    fn unit_gaussians_one_apart() {
        // Sample stats exactly N(0,1) vs N(1,1): {-1,0,1} and {0,1,2}.
        let a = vec![vec![-1.0], vec![0.0], vec![1.0]];
        let b = vec![vec![0.0], vec![1.0], vec![2.0]];
        let d = frechet_distance(&a, &b).unwrap();
        assert!((d - 1.0).abs() < 1e-12, "{d}");
    }

    /// Independent closed-form oracle for 3-D Gaussians: eigenvalues of the
    /// (non-symmetric) product Σ₁Σ₂ from its characteristic cubic, solved
    /// with Cardano's formula.
    fn frechet_oracle_3d(
        mu1: &[f64],
        mu2: &[f64],
        s1: &nalgebra::Matrix3<f64>,
        s2: &nalgebra::Matrix3<f64>,
    ) -> f64 {
        let p = s1 * s2;
        // det(P - λI) = -λ³ + c2 λ² + c1 λ + c0
        let tr = p.trace();
        let tr2 = (p * p).trace();
        let det = p.determinant();
        // Characteristic polynomial λ³ - tr λ² + q λ - det with
        // q = (tr² - tr(P²))/2.
        let q = (tr * tr - tr2) / 2.0;
        // Solve λ³ + aλ² + bλ + c = 0.
        let (a, b, c) = (-tr, q, -det);
        let p1 = b - a * a / 3.0;
        let q1 = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
        let disc = (q1 / 2.0) * (q1 / 2.0) + (p1 / 3.0) * (p1 / 3.0) * (p1 / 3.0);
        let roots: Vec<f64> = if disc.abs() < 1e-18 || disc < 0.0 {
            // Three real roots: trigonometric form.
            let r = (-p1 / 3.0).max(1e-300).sqrt();
            let phi = (3.0 * q1 / (2.0 * p1) / r).clamp(-1.0, 1.0).acos();
            (0..3)
                .map(|k| {
                    2.0 * r * ((phi - 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos()
                        - a / 3.0
                })
                .collect()
        } else {
            let s = (-q1 / 2.0 + disc.sqrt()).cbrt();
            let t = (-q1 / 2.0 - disc.sqrt()).cbrt();
            vec![s + t - a / 3.0]
        };
        let tr_sqrt: f64 = roots.iter().map(|&l| l.max(0.0).sqrt()).sum();
        let mean: f64 = mu1
            .iter()
            .zip(mu2)
            .map(|(x, y)| (x - y) * (x - y))
            .sum();
        mean + s1.trace() + s2.trace() - 2.0 * tr_sqrt
    }

    #[test]
    fn matches_independent_closed_form_in_3d() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        // Build two well-conditioned SPD covariances and matching samples.
        let make_spd = |rng: &mut ChaCha8Rng| {
            let a = nalgebra::Matrix3::<f64>::from_fn(|_, _| rng.random::<f64>() - 0.5);
            a * a.transpose() + nalgebra::Matrix3::identity() * 0.5
        };
        let s1 = make_spd(&mut rng);
        let s2 = make_spd(&mut rng);
        let mu1 = [0.3, -0.2, 0.7];
        let mu2 = [-0.1, 0.4, 0.2];

        // Construct samples whose SAMPLE stats are exactly (mu, S): start
        // from the columns of the Cholesky factor scaled to the sample
        // covariance convention.
        let build = |mu: &[f64], s: &nalgebra::Matrix3<f64>| -> Vec<Vec<f64>> {
            let l = s.cholesky().unwrap().l();
            // Six points: ±columns of L·sqrt((n-1)/2) around mu give sample
            // covariance exactly S (n = 6).
            let scale = ((6.0f64 - 1.0) / 2.0).sqrt();
            let mut pts = Vec::new();
            for k in 0..3 {
                let col = l.column(k) * scale;
                for sign in [1.0, -1.0] {
                    pts.push(vec![
                        mu[0] + sign * col[0],
                        mu[1] + sign * col[1],
                        mu[2] + sign * col[2],
                    ]);
                }
            }
            pts
        };
        let a = build(&mu1, &s1);
        let b = build(&mu2, &s2);
        let got = frechet_distance(&a, &b).unwrap();
        let want = frechet_oracle_3d(&mu1, &mu2, &s1, &s2);
        assert!(
            (got - want).abs() < 1e-8,
            "frechet {got} vs oracle {want}"
        );
    }

    #[test]
    fn tiny_sets_are_rejected() {
        assert!(frechet_distance(&[vec![0.0]], &[vec![0.0], vec![1.0]]).is_err());
    }
}
