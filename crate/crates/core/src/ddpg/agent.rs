//! Deterministic policy gradient with target networks.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::neural::{Activation, Adam, GradientSet, MlpParams};
use crate::world::{Action, StateVector};

use super::config::AgentConfig;
use super::replay::{ReplayBuffer, Transition};
use super::{stream_rng, DdpgError, Stream};

/// Scaled network input for a raw observation.
pub fn scaled_state(state: &[f64], scale: f64) -> Vec<f64> {
    state.iter().map(|v| v * scale).collect()
}

/// Critic input: scaled state followed by the action.
pub fn critic_input(state: &[f64], action: &[f64], scale: f64) -> Vec<f64> {
    let mut input = Vec::with_capacity(state.len() + action.len());
    input.extend(state.iter().map(|v| v * scale));
    input.extend_from_slice(action);
    input
}

fn as_action(values: &[f64]) -> Action {
    [values[0], values[1]]
}

/// Row-major batch of scaled states (or next states).
pub(crate) fn state_batch<'a>(
    states: impl Iterator<Item = &'a StateVector>,
    scale: f64,
) -> Vec<f64> {
    states
        .flat_map(|s| s.values().iter().map(move |v| v * scale))
        .collect()
}

/// Row-major batch of critic inputs: each scaled state followed by its
/// action.
fn join_actions(states: &[f64], actions: &[f64], rows: usize) -> Vec<f64> {
    if rows == 0 {
        return Vec::new();
    }
    let d = states.len() / rows;
    let a = actions.len() / rows;
    let mut out = Vec::with_capacity(rows * (d + a));
    for (s, act) in states.chunks_exact(d).zip(actions.chunks_exact(a)) {
        out.extend_from_slice(s);
        out.extend_from_slice(act);
    }
    out
}

fn stored_actions(batch: &[&Transition]) -> Vec<f64> {
    batch.iter().flat_map(|t| t.action).collect()
}

/// Bootstrap targets computed from the target networks only.
pub fn critic_target(
    batch: &[&Transition],
    target_actor: &MlpParams,
    target_critic: &MlpParams,
    gamma: f64,
    scale: f64,
) -> Result<Vec<f64>, DdpgError> {
    let live: Vec<&Transition> = batch.iter().copied().filter(|t| !t.done).collect();
    let mut bootstrap = Vec::new().into_iter();
    if !live.is_empty() {
        let next = state_batch(live.iter().map(|t| &t.next_state), scale);
        let actions = target_actor.infer_batch(&next, live.len())?;
        let q =
            target_critic.infer_batch(&join_actions(&next, &actions, live.len()), live.len())?;
        bootstrap = q.into_iter();
    }
    Ok(batch
        .iter()
        .map(|t| {
            if t.done {
                t.reward
            } else {
                t.reward + gamma * bootstrap.next().expect("one value per live transition")
            }
        })
        .collect())
}

/// Mean squared error between `targets` and `critic(s, a)`.
pub fn critic_loss(
    critic: &MlpParams,
    batch: &[&Transition],
    targets: &[f64],
    scale: f64,
) -> Result<f64, DdpgError> {
    check_targets(batch, targets)?;
    let states = state_batch(batch.iter().map(|t| &t.state), scale);
    let q = critic.infer_batch(
        &join_actions(&states, &stored_actions(batch), batch.len()),
        batch.len(),
    )?;
    let total: f64 = q.iter().zip(targets).map(|(q, y)| (y - q) * (y - q)).sum();
    Ok(total / batch.len() as f64)
}

/// Gradient of [`critic_loss`] with respect to the critic parameters, and
/// the loss itself.
pub fn critic_loss_gradient(
    critic: &MlpParams,
    batch: &[&Transition],
    targets: &[f64],
    scale: f64,
) -> Result<(GradientSet, f64), DdpgError> {
    check_targets(batch, targets)?;
    let rows = batch.len();
    let n = rows as f64;
    let states = state_batch(batch.iter().map(|t| &t.state), scale);
    let cache = critic.forward_batch(&join_actions(&states, &stored_actions(batch), rows), rows)?;
    let errors: Vec<f64> = cache
        .output()
        .iter()
        .zip(targets)
        .map(|(q, y)| q - y)
        .collect();
    let total: f64 = errors.iter().map(|e| e * e).sum();
    let out_grad: Vec<f64> = errors.iter().map(|e| 2.0 * e / n).collect();
    let mut grads = GradientSet::zeros_like(critic);
    critic.backward_batch(&cache, &out_grad, Some(&mut grads))?;
    Ok((grads, total / n))
}

/// Mean of `critic(s, actor(s))` over the batch states.
pub fn policy_objective(
    actor: &MlpParams,
    critic: &MlpParams,
    batch: &[&Transition],
    scale: f64,
) -> Result<f64, DdpgError> {
    if batch.is_empty() {
        return Err(DdpgError::EmptyBatch);
    }
    let rows = batch.len();
    let states = state_batch(batch.iter().map(|t| &t.state), scale);
    let actions = actor.infer_batch(&states, rows)?;
    let q = critic.infer_batch(&join_actions(&states, &actions, rows), rows)?;
    Ok(q.iter().sum::<f64>() / rows as f64)
}

/// Gradient of [`policy_objective`] with respect to the actor parameters:
/// the action gradient of the critic chained through the actor.
pub fn policy_gradient(
    actor: &MlpParams,
    critic: &MlpParams,
    batch: &[&Transition],
    scale: f64,
) -> Result<(GradientSet, f64), DdpgError> {
    if batch.is_empty() {
        return Err(DdpgError::EmptyBatch);
    }
    let rows = batch.len();
    let n = rows as f64;
    let state_dim = actor.input_dim();
    let action_dim = actor.output_dim();
    let states = state_batch(batch.iter().map(|t| &t.state), scale);
    let actor_cache = actor.forward_batch(&states, rows)?;
    let critic_cache =
        critic.forward_batch(&join_actions(&states, actor_cache.output(), rows), rows)?;
    let mean_q = critic_cache.output().iter().sum::<f64>() / n;
    let input_grad = critic.backward_batch(&critic_cache, &vec![1.0 / n; rows], None)?;
    let action_grad: Vec<f64> = input_grad
        .chunks_exact(state_dim + action_dim)
        .flat_map(|row| row[state_dim..].iter().copied())
        .collect();
    let mut grads = GradientSet::zeros_like(actor);
    actor.backward_batch(&actor_cache, &action_grad, Some(&mut grads))?;
    Ok((grads, mean_q))
}

fn check_targets(batch: &[&Transition], targets: &[f64]) -> Result<(), DdpgError> {
    if batch.is_empty() {
        return Err(DdpgError::EmptyBatch);
    }
    if batch.len() != targets.len() {
        return Err(DdpgError::BatchMismatch {
            batch: batch.len(),
            targets: targets.len(),
        });
    }
    Ok(())
}

/// Online and target actor/critic pairs with their optimisers and random
/// streams.
#[derive(Debug, Clone)]
pub struct AgentBundle {
    pub actor: MlpParams,
    pub critic: MlpParams,
    pub target_actor: MlpParams,
    pub target_critic: MlpParams,
    actor_opt: Adam,
    critic_opt: Adam,
    noise_rng: ChaCha8Rng,
    replay_rng: ChaCha8Rng,
    pub config: AgentConfig,
    /// Current exploration noise std.
    pub noise_std: f64,
}

impl AgentBundle {
    pub fn new(state_dim: usize, config: &AgentConfig, seed: u64) -> Self {
        let mut init = stream_rng(seed, Stream::Init);
        let mut actor_dims = vec![state_dim];
        actor_dims.extend(&config.hidden);
        actor_dims.push(2);
        let mut critic_dims = vec![state_dim + 2];
        critic_dims.extend(&config.hidden);
        critic_dims.push(1);
        let actor = MlpParams::new(&actor_dims, Activation::Relu, Activation::Tanh, &mut init);
        let critic = MlpParams::new(
            &critic_dims,
            Activation::Relu,
            Activation::Identity,
            &mut init,
        );
        Self::from_networks(actor, critic, config, seed)
    }

    /// Wraps given online networks; targets start as exact copies.
    pub fn from_networks(
        actor: MlpParams,
        critic: MlpParams,
        config: &AgentConfig,
        seed: u64,
    ) -> Self {
        Self {
            actor_opt: Adam::new(&actor, config.actor_lr),
            critic_opt: Adam::new(&critic, config.critic_lr),
            target_actor: actor.clone(),
            target_critic: critic.clone(),
            actor,
            critic,
            noise_rng: stream_rng(seed, Stream::Noise),
            replay_rng: stream_rng(seed, Stream::Replay),
            config: config.clone(),
            noise_std: config.noise_start,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn greedy_action(&self, state: &StateVector) -> Result<Action, DdpgError> {
        let out = self
            .actor
            .infer(&scaled_state(state.values(), self.config.obs_scale))?;
        Ok(as_action(&out))
    }

    /// Adds independent `N(0, noise_std^2)` noise to each component, without
    /// clipping.
    pub fn perturb(&mut self, action: Action) -> Action {
        let mut noisy = action;
        for a in &mut noisy {
            let z: f64 = self.noise_rng.sample(StandardNormal);
            *a += self.noise_std * z;
        }
        noisy
    }

    /// Uniform action over `[-1, 1]^2`, drawn from the exploration stream.
    pub fn random_action(&mut self) -> Action {
        [
            self.noise_rng.random_range(-1.0..=1.0),
            self.noise_rng.random_range(-1.0..=1.0),
        ]
    }

    pub fn select_action(
        &mut self,
        state: &StateVector,
        explore: bool,
    ) -> Result<Action, DdpgError> {
        let action = self.greedy_action(state)?;
        if !explore {
            return Ok(action);
        }
        let noisy = self.perturb(action);
        Ok([noisy[0].clamp(-1.0, 1.0), noisy[1].clamp(-1.0, 1.0)])
    }

    /// One Adam step on the online critic towards `targets`. Returns the loss
    /// before the step.
    pub fn critic_update(
        &mut self,
        batch: &[&Transition],
        targets: &[f64],
    ) -> Result<f64, DdpgError> {
        let (grads, loss) =
            critic_loss_gradient(&self.critic, batch, targets, self.config.obs_scale)?;
        self.critic_opt.step(&mut self.critic, &grads)?;
        Ok(loss)
    }

    /// One Adam ascent step on the mean critic value of the actor's actions.
    /// Returns that mean before the step.
    pub fn actor_update(&mut self, batch: &[&Transition]) -> Result<f64, DdpgError> {
        let (mut grads, mean_q) =
            policy_gradient(&self.actor, &self.critic, batch, self.config.obs_scale)?;
        grads.scale(-1.0);
        self.actor_opt.step(&mut self.actor, &grads)?;
        Ok(mean_q)
    }

    pub fn soft_update_targets(&mut self) -> Result<(), DdpgError> {
        self.target_critic
            .soft_update(&self.critic, self.config.tau)?;
        self.target_actor
            .soft_update(&self.actor, self.config.tau)?;
        Ok(())
    }

    /// Samples a batch, updates critic then actor, then moves the targets.
    pub fn learn(&mut self, buffer: &ReplayBuffer) -> Result<LearnStats, DdpgError> {
        let indices = buffer.sample_indices(self.config.batch_size, &mut self.replay_rng)?;
        let batch: Vec<&Transition> = indices
            .iter()
            .map(|&i| buffer.get(i).expect("sampled index is live"))
            .collect();
        let targets = critic_target(
            &batch,
            &self.target_actor,
            &self.target_critic,
            self.config.gamma,
            self.config.obs_scale,
        )?;
        let critic_loss = self.critic_update(&batch, &targets)?;
        let mean_q = self.actor_update(&batch)?;
        self.soft_update_targets()?;
        Ok(LearnStats {
            critic_loss,
            mean_q,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnStats {
    pub critic_loss: f64,
    pub mean_q: f64,
}
