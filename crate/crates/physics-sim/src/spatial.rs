//! Spatial (6D) vector algebra in world coordinates about the world origin.
//! Motion vectors are [angular; linear-at-origin]; force vectors are
//! [moment-about-origin; force].

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};

pub type SpatialVec = Vector6<f64>;
pub type SpatialMat = Matrix6<f64>;

pub fn spatial(ang: Vector3<f64>, lin: Vector3<f64>) -> SpatialVec {
    Vector6::new(ang.x, ang.y, ang.z, lin.x, lin.y, lin.z)
}

pub fn ang(v: &SpatialVec) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

pub fn lin(v: &SpatialVec) -> Vector3<f64> {
    Vector3::new(v[3], v[4], v[5])
}

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Motion cross product: v ×ₘ m.
pub fn cross_motion(v: &SpatialVec, m: &SpatialVec) -> SpatialVec {
    let (w, vo) = (ang(v), lin(v));
    let (mw, mv) = (ang(m), lin(m));
    spatial(w.cross(&mw), vo.cross(&mw) + w.cross(&mv))
}

/// Force cross product: v ×* f.
pub fn cross_force(v: &SpatialVec, f: &SpatialVec) -> SpatialVec {
    let (w, vo) = (ang(v), lin(v));
    let (n, f3) = (ang(f), lin(f));
    spatial(w.cross(&n) + vo.cross(&f3), w.cross(&f3))
}

/// Spatial force of a plain force applied at a world point.
pub fn force_at_point(point: &Vector3<f64>, force: &Vector3<f64>) -> SpatialVec {
    spatial(point.cross(force), *force)
}

/// Spatial inertia about the world origin for a body with mass `m`, center
/// of mass `c` (world) and rotational inertia `i_c` about the COM (world
/// axes).
pub fn spatial_inertia(m: f64, c: &Vector3<f64>, i_c: &Matrix3<f64>) -> SpatialMat {
    let ch = skew(c);
    let mut out = SpatialMat::zeros();
    let top_left = i_c + m * ch * ch.transpose();
    let top_right = m * ch;
    out.view_mut((0, 0), (3, 3)).copy_from(&top_left);
    out.view_mut((0, 3), (3, 3)).copy_from(&top_right);
    out.view_mut((3, 0), (3, 3)).copy_from(&top_right.transpose());
    out.view_mut((3, 3), (3, 3))
        .copy_from(&(m * Matrix3::identity()));
    out
}

/// Motion subspace column of a revolute axis through a world point.
pub fn revolute_subspace(axis_world: &Vector3<f64>, anchor_world: &Vector3<f64>) -> SpatialVec {
    spatial(*axis_world, anchor_world.cross(axis_world))
}

/// Velocity of a body-fixed world point given the body's spatial velocity.
pub fn point_velocity(v: &SpatialVec, point: &Vector3<f64>) -> Vector3<f64> {
    lin(v) + ang(v).cross(point)
}
