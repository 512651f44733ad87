//! Learning agents: the prediction-augmented actor-critic, the plain
//! actor-critic baseline and the discrete Q-learning baseline.

mod agent;
mod config;
mod dqn;
mod persist;
mod replay;
mod train;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::neural::NeuralError;
use crate::world::{Action, StateVector};

pub use agent::{
    critic_input, critic_loss, critic_loss_gradient, critic_target, policy_gradient,
    policy_objective, scaled_state, AgentBundle, LearnStats,
};
pub use config::{AgentConfig, ExperimentConfig};
pub use dqn::{action_index, dqn_loss, dqn_loss_gradient, dqn_targets, DqnBundle, COMPASS_ACTIONS};
pub use persist::{load_agent, save_agent, Manifest, MANIFEST_FILE};
pub use replay::{ReplayBuffer, Transition};
pub use train::{observe, train, train_with_observer, StepRecord, TrainObserver, TrainOutcome};

#[derive(Debug, Error)]
pub enum DdpgError {
    #[error("cannot sample {requested} transitions from {available}")]
    InsufficientSamples { requested: usize, available: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("batch has {batch} transitions but {targets} targets")]
    BatchMismatch { batch: usize, targets: usize },
    #[error("action {0:?} is not one of the compass moves")]
    NotDiscrete(Action),
    #[error(transparent)]
    Neural(#[from] NeuralError),
}

/// Which agent to train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algo {
    /// Actor-critic whose observation carries predicted obstacle positions.
    Mddpg,
    /// Same agent observing current obstacle positions.
    Ddpg,
    /// Discrete eight-direction Q-learning, current positions.
    Dqn,
}

impl Algo {
    pub const ALL: [Algo; 3] = [Algo::Mddpg, Algo::Ddpg, Algo::Dqn];

    pub fn as_str(self) -> &'static str {
        match self {
            Algo::Mddpg => "mddpg",
            Algo::Ddpg => "ddpg",
            Algo::Dqn => "dqn",
        }
    }

    pub fn uses_prediction(self) -> bool {
        self == Algo::Mddpg
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algo {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mddpg" => Ok(Algo::Mddpg),
            "ddpg" => Ok(Algo::Ddpg),
            "dqn" => Ok(Algo::Dqn),
            other => Err(format!(
                "unknown algorithm `{other}` (expected mddpg, ddpg or dqn)"
            )),
        }
    }
}

/// Independent random streams split off one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Network initialisation.
    Init = 0,
    /// Exploration noise / epsilon draws.
    Noise = 1,
    /// Replay sampling.
    Replay = 2,
    /// Per-episode world seeds during training.
    World = 3,
    /// Per-episode world seeds during greedy evaluation.
    Eval = 4,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// A trained (or training) agent of any algorithm.
#[derive(Debug, Clone)]
pub enum Policy {
    ActorCritic(AgentBundle),
    Q(DqnBundle),
}

impl Policy {
    pub fn new(algo: Algo, state_dim: usize, config: &AgentConfig, seed: u64) -> Self {
        match algo {
            Algo::Mddpg | Algo::Ddpg => {
                Policy::ActorCritic(AgentBundle::new(state_dim, config, seed))
            }
            Algo::Dqn => Policy::Q(DqnBundle::new(state_dim, config, seed)),
        }
    }

    pub fn state_dim(&self) -> usize {
        match self {
            Policy::ActorCritic(b) => b.state_dim(),
            Policy::Q(b) => b.state_dim(),
        }
    }

    pub fn greedy_action(&self, state: &StateVector) -> Result<Action, DdpgError> {
        match self {
            Policy::ActorCritic(b) => b.greedy_action(state),
            Policy::Q(b) => b.greedy_action(state),
        }
    }

    pub fn select_action(
        &mut self,
        state: &StateVector,
        explore: bool,
    ) -> Result<Action, DdpgError> {
        match self {
            Policy::ActorCritic(b) => b.select_action(state, explore),
            Policy::Q(b) => b.select_action(state, explore),
        }
    }

    /// Action taken while the replay buffer warms up: uniform for the
    /// actor-critic agents, epsilon-greedy with the current schedule for DQN.
    pub fn warmup_action(&mut self, state: &StateVector) -> Result<Action, DdpgError> {
        match self {
            Policy::ActorCritic(b) => Ok(b.random_action()),
            Policy::Q(b) => b.select_action(state, true),
        }
    }

    /// Updates the exploration schedule; `progress` is the fraction of
    /// training episodes already started.
    pub fn set_progress(&mut self, progress: f64) {
        match self {
            Policy::ActorCritic(b) => {
                b.noise_std = b
                    .config
                    .decayed(b.config.noise_start, b.config.noise_end, progress)
            }
            Policy::Q(b) => {
                b.epsilon = b
                    .config
                    .decayed(b.config.epsilon_start, b.config.epsilon_end, progress)
            }
        }
    }

    pub fn learn(&mut self, buffer: &ReplayBuffer) -> Result<(), DdpgError> {
        match self {
            Policy::ActorCritic(b) => b.learn(buffer).map(|_| ()),
            Policy::Q(b) => b.learn(buffer).map(|_| ()),
        }
    }
}

/// A policy together with the algorithm that produced it.
#[derive(Debug, Clone)]
pub struct Agent {
    pub algo: Algo,
    pub policy: Policy,
}
