//! Stage 2: a reinforcement-learned controller that adapts canonical motion
//! to a simulated character. Root-canonicalized observations, Gaussian-
//! kernel tracking rewards, PPO with GAE, auto-regressive inference and the
//! iterative keyframe-error redistribution pass.

mod adapt;
mod env;
mod error;
mod gae;
mod obs;
mod policy;
mod ppo;
mod reference;
mod reward;
mod rollout;

pub use adapt::{adapt_motion, adapt_motion_with, redistribute_keyframe_error, reference_root_targets, AdaptResult};
pub use env::{EarlyTermination, TrackingEnv};
pub use error::RlError;
pub use gae::gae;
pub use obs::{build_observation, observation_dim, Observation};
pub use policy::Policy;
pub use ppo::{ppo_update, PpoConfig, PpoReport};
pub use reference::{joint_angles_from_local, RefState, ReferenceTrack};
pub use reward::{compute_reward, RewardBreakdown, RewardWeights, TrackingFeatures};
pub use rollout::{rollout, train_controller, train_log_csv, EnvTrajectory, TrainRecord, TransitionBatch};
