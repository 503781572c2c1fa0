//! The tracking environment: one simulated character chasing one reference
//! track, auto-regressively, with reference-state initialization and early
//! termination on tracking failure.

use std::sync::Arc;

use physics_sim::{
    body_kinematics, pd_torques, step_pd, ArticulatedCharacter, BaseKind, Environment, SimState,
    DEFAULT_SUBSTEPS,
};

use crate::error::RlError;
use crate::obs::{build_observation, Observation};
use crate::reference::ReferenceTrack;
use crate::reward::{compute_reward, RewardBreakdown, RewardWeights, TrackingFeatures};

/// Failure thresholds that abort an episode.
#[derive(Debug, Clone, Copy)]
pub struct EarlyTermination {
    /// Allowed root height deviation as a fraction of hip height.
    pub root_height_factor: f64,
    /// Continuous non-foot ground contact longer than this aborts (s).
    pub nonfoot_contact_time: f64,
}

impl Default for EarlyTermination {
    fn default() -> Self {
        EarlyTermination {
            root_height_factor: 0.5,
            nonfoot_contact_time: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StepOutcome {
    pub reward: RewardBreakdown,
    /// Episode finished (end of reference or termination).
    pub done: bool,
    /// Finished by failure rather than by reaching the end.
    pub terminated: bool,
}

pub struct TrackingEnv {
    character: Arc<ArticulatedCharacter>,
    world: Environment,
    reference: Arc<ReferenceTrack>,
    /// Character joints entering the tracking reward (mapped joints).
    mapped_joints: Vec<usize>,
    weights: RewardWeights,
    termination: EarlyTermination,
    substeps: usize,
    state: SimState,
    cursor: usize,
    nonfoot_timer: f64,
    episode_steps: usize,
}

impl TrackingEnv {
    pub fn new(
        character: Arc<ArticulatedCharacter>,
        world: Environment,
        reference: Arc<ReferenceTrack>,
        mapped_joints: Vec<usize>,
        weights: RewardWeights,
        termination: EarlyTermination,
    ) -> Result<Self, RlError> {
        if reference.len() < 2 {
            return Err(RlError::LengthMismatch(
                "reference must hold at least 2 frames".into(),
            ));
        }
        let mut env = TrackingEnv {
            state: SimState::rest(&character),
            character,
            world,
            reference,
            mapped_joints,
            weights,
            termination,
            substeps: DEFAULT_SUBSTEPS,
            cursor: 0,
            nonfoot_timer: 0.0,
            episode_steps: 0,
        };
        env.reset();
        Ok(env)
    }

    /// Reference-state initialization: pose and velocity of frame 0.
    pub fn reset(&mut self) {
        let f0 = &self.reference.frames[0];
        let mut state = SimState::rest(&self.character);
        if self.character.base() == BaseKind::Free {
            state.set_root_pose(&self.character, f0.root_position, &f0.root_rotation);
            state.set_root_velocity(&self.character, f0.root_lin_vel, f0.root_ang_vel);
        }
        state.joint_angles_mut(&self.character).copy_from_slice(&f0.angles);
        state.joint_rates_mut(&self.character).copy_from_slice(&f0.rates);
        self.state = state;
        self.cursor = 0;
        self.nonfoot_timer = 0.0;
        self.episode_steps = 0;
    }

    pub fn observe(&self) -> Result<Observation, RlError> {
        let kin = body_kinematics(&self.state, &self.character);
        let target = &self.reference.frames[(self.cursor + 1).min(self.reference.len() - 1)];
        build_observation(&kin, &self.character, target)
    }

    /// Apply PD targets for one control step and score against the next
    /// reference frame. On simulator divergence the episode terminates with
    /// zero reward instead of erroring.
    pub fn step(&mut self, action: &[f64]) -> Result<StepOutcome, RlError> {
        let dt = 1.0 / self.reference.fps;
        let next = match step_pd(
            &self.state,
            action,
            &self.character,
            &self.world,
            dt,
            self.substeps,
        ) {
            Ok(s) => s,
            Err(physics_sim::SimError::Diverged(_)) => {
                self.episode_steps += 1;
                return Ok(StepOutcome {
                    reward: RewardBreakdown::default(),
                    done: true,
                    terminated: true,
                });
            }
            Err(e) => return Err(e.into()),
        };
        self.state = next;
        self.cursor += 1;
        self.episode_steps += 1;

        let target = &self.reference.frames[self.cursor.min(self.reference.len() - 1)];
        let kin = body_kinematics(&self.state, &self.character);
        let sim_features = self.features(&kin);
        let ref_features = self.features(&target.kin);
        let torques = pd_torques(&self.state, &self.character, action)?;
        let power: Vec<f64> = torques
            .iter()
            .zip(self.state.joint_rates(&self.character))
            .map(|(t, qd)| t * qd)
            .collect();
        let reward = compute_reward(&sim_features, &ref_features, &power, &self.weights)?;

        // Early termination checks.
        let mut terminated = false;
        if self.character.base() == BaseKind::Free {
            let root = self.character.skeleton().root_index();
            let height_err = (kin.positions[root].y - target.kin.positions[root].y).abs();
            let bound = self.termination.root_height_factor
                * self.character.skeleton().hip_height();
            if height_err > bound {
                terminated = true;
            }
        }
        let nonfoot_contact = self
            .character
            .bodies()
            .iter()
            .zip(&self.state.contacts)
            .any(|(b, &c)| c && !b.contact_allowed);
        if nonfoot_contact {
            self.nonfoot_timer += dt;
            if self.nonfoot_timer > self.termination.nonfoot_contact_time {
                terminated = true;
            }
        } else {
            self.nonfoot_timer = 0.0;
        }

        let end_of_clip = self.cursor + 1 >= self.reference.len();
        Ok(StepOutcome {
            reward,
            done: end_of_clip || terminated,
            terminated,
        })
    }

    fn features(&self, kin: &physics_sim::JointKinematics) -> TrackingFeatures {
        let mut f = TrackingFeatures::default();
        for &j in &self.mapped_joints {
            f.positions.push(kin.positions[j]);
            f.rotations.push(kin.rotations[j]);
            f.lin_vel.push(kin.lin_vel[j]);
            f.ang_vel.push(kin.ang_vel[j]);
        }
        f
    }

    pub fn character(&self) -> &Arc<ArticulatedCharacter> {
        &self.character
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn reference(&self) -> &Arc<ReferenceTrack> {
        &self.reference
    }

    pub fn world(&self) -> &Environment {
        &self.world
    }

    pub fn episode_steps(&self) -> usize {
        self.episode_steps
    }

    pub fn weights(&self) -> &RewardWeights {
        &self.weights
    }
}
