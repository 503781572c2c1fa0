//! Gaussian-kernel tracking reward over mapped joints plus an energy
//! penalty on per-DOF mechanical power.

use nalgebra::{Matrix3, Vector3};

use motion_core::Rot6D;

use crate::error::RlError;

/// Weights and kernel sensitivities of the five reward components.
#[derive(Debug, Clone, Copy)]
pub struct RewardWeights {
    pub w_gp: f64,
    pub w_gr: f64,
    pub w_gpd: f64,
    pub w_grd: f64,
    pub w_eg: f64,
    pub k_gp: f64,
    pub k_gr: f64,
    pub k_gpd: f64,
    pub k_grd: f64,
    pub k_eg: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            w_gp: 0.8,
            w_gr: 1.0,
            w_gpd: 0.2,
            w_grd: 0.2,
            w_eg: 0.001,
            k_gp: 10.0,
            k_gr: 50.0,
            k_gpd: 1.0,
            k_grd: 1.0,
            k_eg: 0.01,
        }
    }
}

impl RewardWeights {
    /// Upper bound of the total reward (every kernel at 1).
    pub fn max_total(&self) -> f64 {
        self.w_gp + self.w_gr + self.w_gpd + self.w_grd + self.w_eg
    }
}

/// Global-space features of the mapped joints of one frame.
#[derive(Debug, Clone, Default)]
pub struct TrackingFeatures {
    pub positions: Vec<Vector3<f64>>,
    pub rotations: Vec<Matrix3<f64>>,
    pub lin_vel: Vec<Vector3<f64>>,
    pub ang_vel: Vec<Vector3<f64>>,
}

impl TrackingFeatures {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RewardBreakdown {
    pub gp: f64,
    pub gr: f64,
    pub gpd: f64,
    pub grd: f64,
    pub eg: f64,
    pub total: f64,
}

/// r = Σ w·exp(−k·‖f − f̂‖²) over position/rotation/velocity terms plus the
/// energy kernel on per-DOF power τ·q̇. Rotation distance uses the 6D
/// representation difference.
pub fn compute_reward(
    sim: &TrackingFeatures,
    reference: &TrackingFeatures,
    power: &[f64],
    w: &RewardWeights,
) -> Result<RewardBreakdown, RlError> {
    let n = sim.len();
    if reference.len() != n {
        return Err(RlError::DimensionMismatch {
            expected: n,
            got: reference.len(),
        });
    }
    let mut d_gp = 0.0;
    let mut d_gr = 0.0;
    let mut d_gpd = 0.0;
    let mut d_grd = 0.0;
    for j in 0..n {
        d_gp += (sim.positions[j] - reference.positions[j]).norm_squared();
        let a = Rot6D::from_matrix(&sim.rotations[j])?.to_array();
        let b = Rot6D::from_matrix(&reference.rotations[j])?.to_array();
        d_gr += a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>();
        d_gpd += (sim.lin_vel[j] - reference.lin_vel[j]).norm_squared();
        d_grd += (sim.ang_vel[j] - reference.ang_vel[j]).norm_squared();
    }
    let d_eg: f64 = power.iter().map(|p| p * p).sum();

    let gp = w.w_gp * (-w.k_gp * d_gp).exp();
    let gr = w.w_gr * (-w.k_gr * d_gr).exp();
    let gpd = w.w_gpd * (-w.k_gpd * d_gpd).exp();
    let grd = w.w_grd * (-w.k_grd * d_grd).exp();
    let eg = w.w_eg * (-w.k_eg * d_eg).exp();
    Ok(RewardBreakdown {
        gp,
        gr,
        gpd,
        grd,
        eg,
        total: gp + gr + gpd + grd + eg,
    })
}
