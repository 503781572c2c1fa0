//! Axis-aligned box colliders and their uniform world-space scaling.

use nalgebra::Vector3;

use crate::RetargetError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAlignedBox {
    pub center: Vector3<f64>,
    pub half_extent: Vector3<f64>,
}

impl AxisAlignedBox {
    pub fn new(center: Vector3<f64>, half_extent: Vector3<f64>) -> Self {
        AxisAlignedBox {
            center,
            half_extent,
        }
    }
}

/// Uniformly scale colliders in world coordinates (centers and extents).
pub fn scale_colliders(
    boxes: &[AxisAlignedBox],
    ratio: f64,
) -> Result<Vec<AxisAlignedBox>, RetargetError> {
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(RetargetError::BadRatio(ratio));
    }
    Ok(boxes
        .iter()
        .map(|b| AxisAlignedBox {
            center: b.center * ratio,
            half_extent: b.half_extent * ratio,
        })
        .collect())
}
