//! The episodic training loop shared by all three algorithms.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::RngCore;

use crate::geometry::Vec2;
use crate::harness::EpisodeLog;
use crate::predictor::{self, PredictorConfig};
use crate::shaping::{step_reward, StepRewardBreakdown};
use crate::world::{build_observation, SceneConfig, StateVector, World};
use crate::Error;

use super::config::ExperimentConfig;
use super::replay::{ReplayBuffer, Transition};
use super::{stream_rng, Agent, Algo, Policy, Stream};

/// Observation for `algo`. Also returns the full predicted path of every
/// dynamic obstacle when `algo` uses prediction.
pub fn observe(
    world: &World,
    algo: Algo,
    predictor_cfg: &PredictorConfig,
) -> Result<(StateVector, Option<Vec<Vec<Vec2>>>), Error> {
    if !algo.uses_prediction() {
        return Ok((build_observation(world, &world.dynamic_positions())?, None));
    }
    let paths: Vec<Vec<Vec2>> = world
        .state()
        .obstacles
        .iter()
        .map(|o| predictor::predict(&o.history, predictor_cfg))
        .collect::<Result<_, _>>()?;
    let endpoints: Vec<Vec2> = paths
        .iter()
        .map(|p| *p.last().expect("horizon >= 1"))
        .collect();
    Ok((build_observation(world, &endpoints)?, Some(paths)))
}

/// One training step as seen by an observer.
#[derive(Debug)]
pub struct StepRecord<'a> {
    pub episode: usize,
    /// Step index within the episode, starting at 1.
    pub step: usize,
    pub world: &'a World,
    pub reward: &'a StepRewardBreakdown,
    /// Predicted paths the action was chosen from.
    pub predictions: Option<&'a [Vec<Vec2>]>,
}

pub trait TrainObserver {
    fn on_step(&mut self, _record: &StepRecord<'_>) {}
    fn on_episode(&mut self, _log: &EpisodeLog) {}
}

impl TrainObserver for () {}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub agent: Agent,
    pub episodes: Vec<EpisodeLog>,
}

/// Compares horizon-endpoint predictions against the positions the
/// obstacles actually reach.
#[derive(Default)]
struct EndpointTracker {
    pending: VecDeque<(usize, Vec<Vec2>)>,
    total: f64,
    count: usize,
}

impl EndpointTracker {
    fn push(&mut self, due: usize, endpoints: Vec<Vec2>) {
        self.pending.push_back((due, endpoints));
    }

    fn settle(&mut self, step: usize, actual: &[Vec2]) -> Result<(), Error> {
        while let Some((due, _)) = self.pending.front() {
            if *due > step {
                break;
            }
            let (due, predicted) = self.pending.pop_front().expect("front exists");
            if due == step {
                self.total +=
                    predictor::prediction_error(&predicted, actual)? * predicted.len() as f64;
                self.count += predicted.len();
            }
        }
        Ok(())
    }

    fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.total / self.count as f64)
    }
}

pub fn train(
    scene: &SceneConfig,
    cfg: &ExperimentConfig,
    episodes: usize,
    seed: u64,
    algo: Algo,
) -> Result<TrainOutcome, Error> {
    train_with_observer(scene, cfg, episodes, seed, algo, &mut ())
}

/// Trains a fresh agent for `episodes` episodes. Deterministic in `seed`.
pub fn train_with_observer(
    scene: &SceneConfig,
    cfg: &ExperimentConfig,
    episodes: usize,
    seed: u64,
    algo: Algo,
    observer: &mut dyn TrainObserver,
) -> Result<TrainOutcome, Error> {
    cfg.agent.validate().map_err(Error::Config)?;
    cfg.reward.validate()?;
    scene.validate()?;
    let predictor_cfg = cfg.predictor(scene);
    predictor_cfg.validate()?;
    let scene = Arc::new(scene.clone());

    let mut policy = Policy::new(algo, scene.state_dim(), &cfg.agent, seed);
    let mut buffer = ReplayBuffer::new(cfg.agent.buffer_capacity);
    let mut world_seeds = stream_rng(seed, Stream::World);
    let learn_after = cfg.agent.warmup_steps.max(cfg.agent.batch_size);
    let mut total_steps = 0usize;
    let mut logs = Vec::with_capacity(episodes);

    for episode in 0..episodes {
        policy.set_progress(episode as f64 / episodes as f64);
        let mut world = World::reset(Arc::clone(&scene), world_seeds.next_u64())?;
        let (mut state, mut paths) = observe(&world, algo, &predictor_cfg)?;
        let mut tracker = EndpointTracker::default();
        let mut cumulative = 0.0;

        while !world.status().is_terminal() {
            if let Some(p) = &paths {
                let endpoints = p
                    .iter()
                    .map(|path| *path.last().expect("horizon >= 1"))
                    .collect();
                tracker.push(world.state().step_count + predictor_cfg.horizon, endpoints);
            }
            let action = if total_steps < cfg.agent.warmup_steps {
                policy.warmup_action(&state)?
            } else {
                policy.select_action(&state, true)?
            };
            let events = world.step(action)?;
            let reward = step_reward(&events, &cfg.reward)?;
            cumulative += reward.total;
            if paths.is_some() {
                tracker.settle(world.state().step_count, &world.dynamic_positions())?;
            }
            observer.on_step(&StepRecord {
                episode,
                step: world.state().step_count,
                world: &world,
                reward: &reward,
                predictions: paths.as_deref(),
            });

            let (next_state, next_paths) = observe(&world, algo, &predictor_cfg)?;
            buffer.store(Transition {
                state,
                action,
                reward: reward.total,
                next_state: next_state.clone(),
                done: events.status.is_terminal(),
            });
            total_steps += 1;
            if total_steps >= learn_after {
                for _ in 0..cfg.agent.updates_per_step {
                    policy.learn(&buffer)?;
                }
            }
            state = next_state;
            paths = next_paths;
        }

        let log = EpisodeLog {
            episode,
            outcome: world.status(),
            reward: cumulative,
            steps: world.state().step_count,
            path: world.state().path_log.clone(),
            prediction_error: tracker.mean(),
        };
        observer.on_episode(&log);
        logs.push(log);
    }

    Ok(TrainOutcome {
        agent: Agent { algo, policy },
        episodes: logs,
    })
}
