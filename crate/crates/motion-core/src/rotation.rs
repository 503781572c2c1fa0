//! The 6D rotation representation: the first two columns of a rotation
//! matrix, decoded back through Gram–Schmidt. Continuous under regression,
//! unlike Euler angles or quaternions.

use nalgebra::{Matrix3, Vector3};

use crate::error::MotionError;

const PARALLEL_EPS: f64 = 1e-8;
const ORTHO_EPS: f64 = 1e-6;

/// First two columns of a rotation matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rot6D {
    pub a1: Vector3<f64>,
    pub a2: Vector3<f64>,
}

impl Rot6D {
    pub fn identity() -> Self {
        Rot6D {
            a1: Vector3::new(1.0, 0.0, 0.0),
            a2: Vector3::new(0.0, 1.0, 0.0),
        }
    }

    pub fn new(a1: Vector3<f64>, a2: Vector3<f64>) -> Self {
        Rot6D { a1, a2 }
    }

    /// Decode to a rotation matrix via Gram–Schmidt:
    /// b1 = normalize(a1), b2 = normalize(a2 - (b1·a2) b1), b3 = b1 × b2.
    pub fn to_matrix(&self) -> Result<Matrix3<f64>, MotionError> {
        let n1 = self.a1.norm();
        if !n1.is_finite() || n1 < PARALLEL_EPS {
            return Err(MotionError::DegenerateRotation(format!(
                "first column has norm {n1:.3e}"
            )));
        }
        let b1 = self.a1 / n1;
        let proj = b1.dot(&self.a2);
        let r2 = self.a2 - b1 * proj;
        let n2 = r2.norm();
        if !n2.is_finite() || n2 < PARALLEL_EPS {
            return Err(MotionError::DegenerateRotation(format!(
                "columns are parallel (residual norm {n2:.3e})"
            )));
        }
        let b2 = r2 / n2;
        let b3 = b1.cross(&b2);
        Ok(Matrix3::from_columns(&[b1, b2, b3]))
    }

    /// Encode a rotation matrix as its first two columns.
    pub fn from_matrix(m: &Matrix3<f64>) -> Result<Self, MotionError> {
        let gram = m.transpose() * m;
        let dev = (gram - Matrix3::identity()).abs().max();
        if !dev.is_finite() || dev > ORTHO_EPS {
            return Err(MotionError::NotARotation(format!(
                "orthonormality deviation {dev:.3e}"
            )));
        }
        if m.determinant() < 0.0 {
            return Err(MotionError::NotARotation("determinant is negative".into()));
        }
        Ok(Rot6D {
            a1: m.column(0).into(),
            a2: m.column(1).into(),
        })
    }

    pub fn from_slice(v: &[f64]) -> Self {
        debug_assert!(v.len() >= 6);
        Rot6D {
            a1: Vector3::new(v[0], v[1], v[2]),
            a2: Vector3::new(v[3], v[4], v[5]),
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [
            self.a1.x, self.a1.y, self.a1.z, self.a2.x, self.a2.y, self.a2.z,
        ]
    }
}
