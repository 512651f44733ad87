//! Greedy (noise-free) evaluation of a trained agent.

use std::sync::Arc;

use rand::RngCore;

use crate::ddpg::{observe, stream_rng, Agent, ExperimentConfig, Stream};
use crate::geometry::Vec2;
use crate::shaping::step_reward;
use crate::world::{SceneConfig, World};
use crate::Error;

use super::exec::Execution;
use super::metrics::EpisodeLog;

/// Positions at one instant: the agent first, then every dynamic obstacle.
pub type Frame = Vec<Vec2>;

fn frame(world: &World) -> Frame {
    let mut f = vec![world.state().agent_pos];
    f.extend(world.dynamic_positions());
    f
}

/// Runs one greedy episode from `world_seed`, returning the log and a frame
/// per time step (start included).
pub fn rollout(
    agent: &Agent,
    scene: &Arc<SceneConfig>,
    cfg: &ExperimentConfig,
    episode: usize,
    world_seed: u64,
) -> Result<(EpisodeLog, Vec<Frame>), Error> {
    let predictor_cfg = cfg.predictor(scene);
    let mut world = World::reset(Arc::clone(scene), world_seed)?;
    let mut frames = vec![frame(&world)];
    let mut cumulative = 0.0;
    while !world.status().is_terminal() {
        let (state, _) = observe(&world, agent.algo, &predictor_cfg)?;
        let action = agent.policy.greedy_action(&state)?;
        let events = world.step(action)?;
        cumulative += step_reward(&events, &cfg.reward)?.total;
        frames.push(frame(&world));
    }
    let log = EpisodeLog {
        episode,
        outcome: world.status(),
        reward: cumulative,
        steps: world.state().step_count,
        path: world.state().path_log.clone(),
        prediction_error: None,
    };
    Ok((log, frames))
}

/// World seeds for `episodes` evaluation episodes under master `seed`.
pub fn eval_seeds(seed: u64, episodes: usize) -> Vec<u64> {
    let mut rng = stream_rng(seed, Stream::Eval);
    (0..episodes).map(|_| rng.next_u64()).collect()
}

/// Greedy evaluation over `episodes` episodes. Episodes are independent,
/// so `exec` may spread them across threads; results are identical either
/// way.
pub fn evaluate(
    agent: &Agent,
    scene: &SceneConfig,
    cfg: &ExperimentConfig,
    episodes: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<EpisodeLog>, Error> {
    scene.validate()?;
    if agent.policy.state_dim() != scene.state_dim() {
        return Err(Error::Config(format!(
            "model expects {} observation values but the scene produces {}",
            agent.policy.state_dim(),
            scene.state_dim()
        )));
    }
    let scene = Arc::new(scene.clone());
    let jobs: Vec<(usize, u64)> = eval_seeds(seed, episodes).into_iter().enumerate().collect();
    exec.map(&jobs, |&(episode, world_seed)| {
        rollout(agent, &scene, cfg, episode, world_seed).map(|(log, _)| log)
    })
    .into_iter()
    .collect()
}
