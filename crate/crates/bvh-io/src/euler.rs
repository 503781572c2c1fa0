//! Euler angle conversions for BVH channel orders.
//!
//! BVH applies the listed rotation channels in order about local axes, so a
//! `Zrotation Yrotation Xrotation` joint composes as `Rz * Ry * Rx`.

use nalgebra::Matrix3;

use crate::parse::Channel;

fn axis_rotation(channel: Channel, radians: f64) -> Matrix3<f64> {
    let (s, c) = radians.sin_cos();
    match channel {
        Channel::Xrotation => Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c),
        Channel::Yrotation => Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c),
        Channel::Zrotation => Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
        _ => Matrix3::identity(),
    }
}

/// Compose rotation channels in declared order (angles in radians).
pub fn euler_to_matrix(order: &[Channel], radians: &[f64]) -> Matrix3<f64> {
    let mut m = Matrix3::identity();
    for (ch, &a) in order.iter().zip(radians) {
        if ch.is_rotation() {
            m *= axis_rotation(*ch, a);
        }
    }
    m
}

/// Extract (z, y, x) radians such that `R = Rz * Ry * Rx`.
pub fn matrix_to_euler_zyx(m: &Matrix3<f64>) -> [f64; 3] {
    let sy = -m[(2, 0)];
    let y = sy.clamp(-1.0, 1.0).asin();
    if sy.abs() < 1.0 - 1e-9 {
        let x = m[(2, 1)].atan2(m[(2, 2)]);
        let z = m[(1, 0)].atan2(m[(0, 0)]);
        [z, y, x]
    } else {
        // Gimbal lock: fold x into z.
        let z = (-m[(0, 1)]).atan2(m[(1, 1)]);
        [z, y, 0.0]
    }
}

/// Extract (x, y, z) radians such that `R = Rx * Ry * Rz`.
pub fn matrix_to_euler_xyz(m: &Matrix3<f64>) -> [f64; 3] {
    let sy = m[(0, 2)];
    let y = sy.clamp(-1.0, 1.0).asin();
    if sy.abs() < 1.0 - 1e-9 {
        let x = (-m[(1, 2)]).atan2(m[(2, 2)]);
        let z = (-m[(0, 1)]).atan2(m[(0, 0)]);
        [x, y, z]
    } else {
        let x = m[(1, 0)].atan2(m[(1, 1)]);
        [x, y, 0.0]
    }
}
