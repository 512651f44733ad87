//! Discrete-action Q-learning baseline over eight compass moves.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::neural::{Activation, Adam, GradientSet, MlpParams};
use crate::world::{Action, StateVector};

use super::agent::{scaled_state, state_batch};
use super::config::AgentConfig;
use super::replay::{ReplayBuffer, Transition};
use super::{stream_rng, DdpgError, Stream};

/// Full-step moves: E, NE, N, NW, W, SW, S, SE.
pub const COMPASS_ACTIONS: [Action; 8] = [
    [1.0, 0.0],
    [1.0, 1.0],
    [0.0, 1.0],
    [-1.0, 1.0],
    [-1.0, 0.0],
    [-1.0, -1.0],
    [0.0, -1.0],
    [1.0, -1.0],
];

pub fn action_index(action: Action) -> Option<usize> {
    COMPASS_ACTIONS.iter().position(|a| *a == action)
}

fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| {
            if *v > best.1 {
                (i, *v)
            } else {
                best
            }
        })
        .0
}

/// `r` for terminal transitions, `r + gamma * max_a' Q_target(s', a')`
/// otherwise.
pub fn dqn_targets(
    batch: &[&Transition],
    q_target: &MlpParams,
    gamma: f64,
    scale: f64,
) -> Result<Vec<f64>, DdpgError> {
    let live: Vec<&Transition> = batch.iter().copied().filter(|t| !t.done).collect();
    let mut best = Vec::new().into_iter();
    if !live.is_empty() {
        let next = state_batch(live.iter().map(|t| &t.next_state), scale);
        let q = q_target.infer_batch(&next, live.len())?;
        best = q
            .chunks_exact(q_target.output_dim())
            .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect::<Vec<_>>()
            .into_iter();
    }
    Ok(batch
        .iter()
        .map(|t| {
            if t.done {
                t.reward
            } else {
                t.reward + gamma * best.next().expect("one value per live transition")
            }
        })
        .collect())
}

fn index_of(t: &Transition) -> Result<usize, DdpgError> {
    action_index(t.action).ok_or(DdpgError::NotDiscrete(t.action))
}

fn check(batch: &[&Transition], targets: &[f64]) -> Result<Vec<usize>, DdpgError> {
    if batch.is_empty() {
        return Err(DdpgError::EmptyBatch);
    }
    if batch.len() != targets.len() {
        return Err(DdpgError::BatchMismatch {
            batch: batch.len(),
            targets: targets.len(),
        });
    }
    batch.iter().map(|t| index_of(t)).collect()
}

pub fn dqn_loss(
    q: &MlpParams,
    batch: &[&Transition],
    targets: &[f64],
    scale: f64,
) -> Result<f64, DdpgError> {
    let indices = check(batch, targets)?;
    let out = q.output_dim();
    let values = q.infer_batch(
        &state_batch(batch.iter().map(|t| &t.state), scale),
        batch.len(),
    )?;
    let total: f64 = indices
        .iter()
        .zip(targets)
        .enumerate()
        .map(|(r, (a, y))| (values[r * out + a] - y).powi(2))
        .sum();
    Ok(total / batch.len() as f64)
}

pub fn dqn_loss_gradient(
    q: &MlpParams,
    batch: &[&Transition],
    targets: &[f64],
    scale: f64,
) -> Result<(GradientSet, f64), DdpgError> {
    let indices = check(batch, targets)?;
    let rows = batch.len();
    let n = rows as f64;
    let out = q.output_dim();
    let cache = q.forward_batch(&state_batch(batch.iter().map(|t| &t.state), scale), rows)?;
    let mut out_grad = vec![0.0; rows * out];
    let mut total = 0.0;
    for (r, (a, y)) in indices.iter().zip(targets).enumerate() {
        let e = cache.output()[r * out + a] - y;
        total += e * e;
        out_grad[r * out + a] = 2.0 * e / n;
    }
    let mut grads = GradientSet::zeros_like(q);
    q.backward_batch(&cache, &out_grad, Some(&mut grads))?;
    Ok((grads, total / n))
}

#[derive(Debug, Clone)]
pub struct DqnBundle {
    pub q: MlpParams,
    pub q_target: MlpParams,
    opt: Adam,
    explore_rng: ChaCha8Rng,
    replay_rng: ChaCha8Rng,
    pub config: AgentConfig,
    pub epsilon: f64,
    updates: u64,
}

impl DqnBundle {
    pub fn new(state_dim: usize, config: &AgentConfig, seed: u64) -> Self {
        let mut init = stream_rng(seed, Stream::Init);
        let mut dims = vec![state_dim];
        dims.extend(&config.hidden);
        dims.push(COMPASS_ACTIONS.len());
        let q = MlpParams::new(&dims, Activation::Relu, Activation::Identity, &mut init);
        Self::from_network(q, config, seed)
    }

    pub fn from_network(q: MlpParams, config: &AgentConfig, seed: u64) -> Self {
        Self {
            opt: Adam::new(&q, config.dqn_lr),
            q_target: q.clone(),
            q,
            explore_rng: stream_rng(seed, Stream::Noise),
            replay_rng: stream_rng(seed, Stream::Replay),
            config: config.clone(),
            epsilon: config.epsilon_start,
            updates: 0,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.q.input_dim()
    }

    pub fn greedy_index(&self, state: &StateVector) -> Result<usize, DdpgError> {
        let values = self
            .q
            .infer(&scaled_state(state.values(), self.config.obs_scale))?;
        Ok(argmax(&values))
    }

    pub fn greedy_action(&self, state: &StateVector) -> Result<Action, DdpgError> {
        Ok(COMPASS_ACTIONS[self.greedy_index(state)?])
    }

    /// Epsilon-greedy when exploring.
    pub fn select_action(
        &mut self,
        state: &StateVector,
        explore: bool,
    ) -> Result<Action, DdpgError> {
        if explore && self.explore_rng.random_bool(self.epsilon.clamp(0.0, 1.0)) {
            let i = self.explore_rng.random_range(0..COMPASS_ACTIONS.len());
            return Ok(COMPASS_ACTIONS[i]);
        }
        self.greedy_action(state)
    }

    /// One Q-learning step on `batch`; hard-copies into the target network
    /// every `dqn_target_sync` updates. Returns the loss before the step.
    pub fn dqn_baseline_update(&mut self, batch: &[&Transition]) -> Result<f64, DdpgError> {
        let targets = dqn_targets(
            batch,
            &self.q_target,
            self.config.gamma,
            self.config.obs_scale,
        )?;
        let (grads, loss) = dqn_loss_gradient(&self.q, batch, &targets, self.config.obs_scale)?;
        self.opt.step(&mut self.q, &grads)?;
        self.updates += 1;
        if self.updates % self.config.dqn_target_sync == 0 {
            self.q_target.copy_from(&self.q)?;
        }
        Ok(loss)
    }

    pub fn learn(&mut self, buffer: &ReplayBuffer) -> Result<f64, DdpgError> {
        let indices = buffer.sample_indices(self.config.batch_size, &mut self.replay_rng)?;
        let batch: Vec<&Transition> = indices
            .iter()
            .map(|&i| buffer.get(i).expect("sampled index is live"))
            .collect();
        self.dqn_baseline_update(&batch)
    }
}
