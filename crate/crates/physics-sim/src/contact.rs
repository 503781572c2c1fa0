//! Penalty-spring contacts with a Coulomb friction clamp.
//!
//! Contact points are spheres at the two ends of each body capsule, tested
//! against the ground plane and axis-aligned boxes.

use nalgebra::Vector3;

use retarget::AxisAlignedBox;

use crate::character::ArticulatedCharacter;
use crate::dynamics::BodyFrame;
use crate::spatial::{ang, force_at_point, lin, SpatialVec};

/// Contact material parameters shared by every environment.
#[derive(Debug, Clone, Copy)]
pub struct ContactParams {
    /// Normal penalty stiffness, N/m.
    pub stiffness: f64,
    /// Normal damping, N·s/m.
    pub damping: f64,
    /// Tangential viscous coefficient below the Coulomb clamp, N·s/m.
    pub tangential_damping: f64,
}

impl Default for ContactParams {
    fn default() -> Self {
        ContactParams {
            stiffness: 3.0e4,
            damping: 1.0e3,
            tangential_damping: 1.0e3,
        }
    }
}

/// Simulation world: a ground plane, optional box colliders, friction and
/// gravity (m/s², pointing down).
#[derive(Debug, Clone)]
pub struct Environment {
    pub ground_height: f64,
    pub boxes: Vec<AxisAlignedBox>,
    pub friction: f64,
    pub gravity: f64,
    pub contact: ContactParams,
}

impl Default for Environment {
    fn default() -> Self {
        Environment {
            ground_height: 0.0,
            boxes: Vec::new(),
            friction: 0.8,
            gravity: 9.81,
            contact: ContactParams::default(),
        }
    }
}

impl Environment {
    pub fn flat() -> Self {
        Environment::default()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ContactPoint {
    pub body: usize,
    pub position: Vector3<f64>,
    pub force: Vector3<f64>,
    pub depth: f64,
}

/// Penetration depth and outward normal of a sphere against the
/// environment, deepest feature wins.
fn probe(env: &Environment, center: &Vector3<f64>, radius: f64) -> Option<(f64, Vector3<f64>)> {
    let mut best: Option<(f64, Vector3<f64>)> = None;
    let ground_depth = (env.ground_height + radius) - center.y;
    if ground_depth > 0.0 {
        best = Some((ground_depth, Vector3::y()));
    }
    for b in &env.boxes {
        let lo = b.center - b.half_extent;
        let hi = b.center + b.half_extent;
        let clamped = Vector3::new(
            center.x.clamp(lo.x, hi.x),
            center.y.clamp(lo.y, hi.y),
            center.z.clamp(lo.z, hi.z),
        );
        let delta = center - clamped;
        let dist = delta.norm();
        let (depth, normal) = if dist > 1e-12 {
            (radius - dist, delta / dist)
        } else {
            // Center inside the box: exit along the closest face.
            let mut depth = f64::INFINITY;
            let mut normal = Vector3::y();
            for axis in 0..3 {
                let out_hi = hi[axis] - center[axis];
                let out_lo = center[axis] - lo[axis];
                let mut n = Vector3::zeros();
                if out_hi < out_lo {
                    n[axis] = 1.0;
                    if out_hi + radius < depth {
                        depth = out_hi + radius;
                        normal = n;
                    }
                } else {
                    n[axis] = -1.0;
                    if out_lo + radius < depth {
                        depth = out_lo + radius;
                        normal = n;
                    }
                }
            }
            (depth, normal)
        };
        if depth > 0.0 && best.map_or(true, |(d, _)| depth > d) {
            best = Some((depth, normal));
        }
    }
    best
}

/// Evaluate all contact forces for one substep of length `dt`. Returns the
/// per-body spatial forces (world, about the origin) plus the individual
/// contact points.
///
/// Damping coefficients are clamped per contact to `m_eff/dt` (the value
/// that exactly zeroes the relative velocity in one substep), which keeps
/// the explicit penalty integration stable for light bodies.
pub fn contact_forces(
    character: &ArticulatedCharacter,
    frames: &[BodyFrame],
    env: &Environment,
    dt: f64,
) -> (Vec<SpatialVec>, Vec<ContactPoint>) {
    let mut per_body = vec![SpatialVec::zeros(); character.bodies().len()];
    let mut points = Vec::new();
    for (i, body) in character.bodies().iter().enumerate() {
        let Some(capsule) = body.capsule else { continue };
        if body.mass <= 0.0 {
            continue;
        }
        let frame = &frames[i];
        let com_world = frame.position + frame.rotation * body.com;
        let inertia_world = frame.rotation * body.inertia * frame.rotation.transpose();
        let inertia_inv = inertia_world
            .try_inverse()
            .unwrap_or_else(nalgebra::Matrix3::zeros);
        for local in [Vector3::zeros(), capsule.end] {
            let p = frame.position + frame.rotation * local;
            let Some((depth, normal)) = probe(env, &p, capsule.radius) else {
                continue;
            };
            let v = lin(&frame.velocity) + ang(&frame.velocity).cross(&p);
            let v_n = v.dot(&normal);

            let arm = (p - com_world).cross(&normal);
            let m_eff = 1.0 / (1.0 / body.mass + (arm.dot(&(inertia_inv * arm))).max(0.0));
            let damp_cap = m_eff / dt;
            let c_n = env.contact.damping.min(damp_cap);
            let c_t = env.contact.tangential_damping.min(damp_cap);

            let fn_mag = (env.contact.stiffness * depth - c_n * v_n).max(0.0);
            if fn_mag <= 0.0 {
                continue;
            }
            let v_t = v - normal * v_n;
            let speed_t = v_t.norm();
            let ft_mag = (c_t * speed_t).min(env.friction * fn_mag);
            let mut force = normal * fn_mag;
            if speed_t > 1e-9 {
                force -= v_t / speed_t * ft_mag;
            }
            per_body[i] += force_at_point(&p, &force);
            points.push(ContactPoint {
                body: i,
                position: p,
                force,
                depth,
            });
        }
    }
    (per_body, points)
}

/// Deepest current penetration per body (0 where nothing touches).
pub fn body_penetrations(
    character: &ArticulatedCharacter,
    frames: &[BodyFrame],
    env: &Environment,
) -> Vec<f64> {
    character
        .bodies()
        .iter()
        .enumerate()
        .map(|(i, body)| {
            let Some(capsule) = body.capsule else {
                return 0.0;
            };
            let mut worst = 0.0f64;
            for local in [Vector3::zeros(), capsule.end] {
                let p = frames[i].position + frames[i].rotation * local;
                if let Some((depth, _)) = probe(env, &p, capsule.radius) {
                    worst = worst.max(depth);
                }
            }
            worst
        })
        .collect()
}

/// Deepest current penetration of any contact sphere (for diagnostics and
/// artifact checks). Returns 0 when nothing touches.
pub fn max_penetration(
    character: &ArticulatedCharacter,
    frames: &[BodyFrame],
    env: &Environment,
) -> f64 {
    body_penetrations(character, frames, env)
        .into_iter()
        .fold(0.0, f64::max)
}
