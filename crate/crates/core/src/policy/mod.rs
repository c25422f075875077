//! Reinforcement learning: the [`Policy`] interface and its tabular
//! Q-learning implementation.

mod checkpoint;
mod qtable;
mod state;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CheckpointError};
pub use qtable::QTable;
pub use state::{canonicalize, ActionMap, InvalidStateKey, StateKey, DIHEDRAL};

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use parking_lot::RwLock;
use rand::RngCore;

use crate::game::Square;

/// A Q-table shared between a learning loop (writer) and advice serving (readers).
pub type SharedPolicy = Arc<RwLock<QTable>>;

pub fn shared(table: QTable) -> SharedPolicy {
    Arc::new(RwLock::new(table))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolicyError {
    #[error("no legal actions")]
    NoLegalActions,
    #[error("the policy has no stored values")]
    EmptyPolicy,
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RunState {
    #[default]
    Running,
    Paused,
    Stopped,
}

impl fmt::Display for RunState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunState::Running => "running",
            RunState::Paused => "paused",
            RunState::Stopped => "stopped",
        })
    }
}

impl FromStr for RunState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "running" => Ok(RunState::Running),
            "paused" => Ok(RunState::Paused),
            "stopped" => Ok(RunState::Stopped),
            other => Err(format!("unknown run state {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    /// Multiplicative decay applied once per episode.
    pub epsilon_decay: f64,
    pub epsilon_min: f64,
    pub reward_win: f64,
    pub reward_loss: f64,
    pub reward_draw: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            alpha: 0.1,
            gamma: 0.9,
            epsilon_start: 0.3,
            epsilon_decay: 0.999,
            epsilon_min: 0.01,
            reward_win: 1.0,
            reward_loss: -1.0,
            reward_draw: 0.0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<(), PolicyError> {
        let bad = |msg: &str| Err(PolicyError::InvalidHyperParams(msg.to_string()));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must be in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must be in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_min) {
            return bad("epsilon bounds must be in [0, 1]");
        }
        if !(self.epsilon_decay > 0.0 && self.epsilon_decay <= 1.0) {
            return bad("epsilon decay must be in (0, 1]");
        }
        if self.epsilon_min > self.epsilon_start {
            return bad("epsilon floor exceeds the starting rate");
        }
        if ![self.reward_win, self.reward_loss, self.reward_draw]
            .iter()
            .all(|r| r.is_finite())
        {
            return bad("rewards must be finite");
        }
        Ok(())
    }

    /// Exploration rate after `episodes` decays.
    pub fn epsilon_after(&self, episodes: u64) -> f64 {
        let decayed = self.epsilon_start * self.epsilon_decay.powf(episodes as f64);
        decayed.max(self.epsilon_min)
    }
}

/// One observed step: `(state, action)` earned `reward` and led to `next`
/// (`None` when the episode ended).
#[derive(Debug, Clone, Copy)]
pub struct Transition<'a> {
    pub state: StateKey,
    pub action: Square,
    pub reward: f64,
    pub next: Option<(&'a StateKey, &'a [Square])>,
}

impl<'a> Transition<'a> {
    pub fn terminal(state: StateKey, action: Square, reward: f64) -> Self {
        Transition {
            state,
            action,
            reward,
            next: None,
        }
    }

    pub fn step(state: StateKey, action: Square, reward: f64, next: &'a StateKey, legal_next: &'a [Square]) -> Self {
        Transition {
            state,
            action,
            reward,
            next: Some((next, legal_next)),
        }
    }
}

/// An RL algorithm as seen by an agent: act, learn, and be paused or stopped.
pub trait Policy {
    fn select_action(
        &self,
        state: &StateKey,
        legal: &[Square],
        epsilon: f64,
        rng: &mut dyn RngCore,
    ) -> Result<Square, PolicyError>;

    fn update(&mut self, transition: &Transition<'_>, hp: &HyperParams) -> f64;

    fn run_state(&self) -> RunState;

    fn set_run_state(&mut self, rs: RunState);
}
