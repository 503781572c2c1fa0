//! Desk-scale articulated rigid-body simulation.
//!
//! Reduced coordinates in world frame: composite-rigid-body mass matrix,
//! recursive Newton–Euler bias forces, penalty-spring contacts with a
//! Coulomb clamp and substepped semi-implicit Euler at a 30 FPS control
//! rate. One `SimState` belongs to one environment instance; independent
//! instances step in parallel without shared state.

mod character;
mod contact;
mod dynamics;
mod error;
mod files;
mod sim;
mod spatial;
mod state;

pub use character::{
    ArticulatedCharacter, BaseKind, Body, BuildOptions, Capsule, JointDofs, PdGains,
};
pub use contact::{body_penetrations, contact_forces, max_penetration, ContactParams, ContactPoint, Environment};
pub use dynamics::{
    angular_momentum, bias_forces, kinematics, kinetic_energy, linear_momentum, mass_matrix,
    total_momentum, world_inertias, BodyFrame,
};
pub use error::SimError;
pub use files::{parse_character, parse_environment};
pub use sim::{
    body_frames, body_kinematics, pd_torques, root_velocity, step, step_pd, JointKinematics,
    DEFAULT_SUBSTEPS, VELOCITY_BOUND,
};
pub use spatial::{
    ang, cross_force, cross_motion, force_at_point, lin, point_velocity, revolute_subspace,
    spatial, spatial_inertia, SpatialMat, SpatialVec,
};
pub use state::SimState;
