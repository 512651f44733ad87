//! The planar environment: one agent, static discs and scripted dynamic
//! obstacles.

mod observation;
mod obstacle;
mod scene;

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::Vec2;
use crate::predictor::{self, PredictorConfig};

pub use observation::{build_observation, k_nearest, StateVector};
pub use obstacle::{draw_dwell, draw_speed, ObstacleMode, ObstacleState};
pub use scene::{
    load_scene, DynamicObstacleSpec, SceneConfig, SceneError, StaticObstacle, BUNDLED_SCENES,
    DEFAULT_AGENT_RADIUS, DEFAULT_GOAL_RADIUS, DEFAULT_K_DYNAMIC, DEFAULT_K_STATIC,
    DEFAULT_MAX_STEPS, DEFAULT_OBSTACLE_RADIUS,
};

/// World units moved per unit of action on each axis.
pub const ACTION_SCALE: f64 = 40.0;

pub type Action = [f64; 2];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorldError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("step called on a finished episode ({0:?})")]
    Terminal(Status),
    #[error("action components must be finite, got {0:?}")]
    InvalidAction(Action),
    #[error("expected {expected} dynamic positions, got {found}")]
    PredictionCount { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Running,
    ReachedGoal,
    Collided,
    TimedOut,
}

impl Status {
    pub fn is_terminal(self) -> bool {
        self != Status::Running
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Running => "running",
            Status::ReachedGoal => "reached",
            Status::Collided => "collided",
            Status::TimedOut => "timeout",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        Some(match text {
            "running" => Status::Running,
            "reached" => Status::ReachedGoal,
            "collided" => Status::Collided,
            "timeout" => Status::TimedOut,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub agent_pos: Vec2,
    pub obstacles: Vec<ObstacleState>,
    pub step_count: usize,
    pub status: Status,
    /// Agent positions, starting with the spawn point.
    pub path_log: Vec<Vec2>,
}

/// What one step did, as needed for reward shaping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepEvents {
    pub collided: bool,
    pub reached: bool,
    pub status: Status,
    pub prev_target_distance: f64,
    pub next_target_distance: f64,
    /// Distances (before, after) to the obstacle nearest the agent after the
    /// step; `None` when the scene has no obstacles.
    pub obstacle_distance: Option<(f64, f64)>,
}

/// An episode in progress.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    config: Arc<SceneConfig>,
    state: WorldState,
    rng: ChaCha8Rng,
}

impl World {
    pub fn reset(config: Arc<SceneConfig>, seed: u64) -> Result<Self, WorldError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let obstacles = config
            .dynamics
            .iter()
            .map(|spec| ObstacleState::spawn(spec, config.fit_window, &mut rng))
            .collect();
        let state = WorldState {
            agent_pos: config.agent_start,
            obstacles,
            step_count: 0,
            status: Status::Running,
            path_log: vec![config.agent_start],
        };
        Ok(Self { config, state, rng })
    }

    pub fn config(&self) -> &SceneConfig {
        &self.config
    }

    pub fn shared_config(&self) -> Arc<SceneConfig> {
        Arc::clone(&self.config)
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    pub fn status(&self) -> Status {
        self.state.status
    }

    pub fn dynamic_positions(&self) -> Vec<Vec2> {
        self.state.obstacles.iter().map(|o| o.position).collect()
    }

    /// Horizon-endpoint prediction for every dynamic obstacle.
    pub fn predicted_positions(&self, cfg: &PredictorConfig) -> Vec<Vec2> {
        self.state
            .obstacles
            .iter()
            .map(|o| predictor::predict_endpoint(&o.history, cfg).unwrap_or(o.position))
            .collect()
    }

    /// Every obstacle disc as `(center, radius)`, statics first.
    pub fn obstacle_discs(&self) -> impl Iterator<Item = (Vec2, f64)> + '_ {
        let statics = self.config.statics.iter().map(|s| (s.center, s.radius));
        let dynamics = self
            .state
            .obstacles
            .iter()
            .zip(&self.config.dynamics)
            .map(|(o, spec)| (o.position, spec.radius));
        statics.chain(dynamics)
    }

    pub fn in_collision(&self) -> bool {
        let agent = self.state.agent_pos;
        let r = self.config.agent_radius;
        self.obstacle_discs()
            .any(|(center, radius)| agent.distance(center) < r + radius)
    }

    /// Applies one action: moves the agent by `action * ACTION_SCALE` (clamped
    /// to bounds), advances every obstacle, then resolves collision, goal and
    /// timeout in that order.
    pub fn step(&mut self, action: Action) -> Result<StepEvents, WorldError> {
        if self.state.status.is_terminal() {
            return Err(WorldError::Terminal(self.state.status));
        }
        if !action.iter().all(|a| a.is_finite()) {
            return Err(WorldError::InvalidAction(action));
        }
        let config = Arc::clone(&self.config);
        let prev_agent = self.state.agent_pos;
        let prev_dynamics = self.dynamic_positions();

        let displacement =
            Vec2::new(action[0].clamp(-1.0, 1.0), action[1].clamp(-1.0, 1.0)) * ACTION_SCALE;
        self.state.agent_pos = config.bounds.clamp(prev_agent + displacement);
        for (obstacle, spec) in self.state.obstacles.iter_mut().zip(&config.dynamics) {
            obstacle.advance(spec, &mut self.rng);
        }
        self.state.step_count += 1;
        self.state.path_log.push(self.state.agent_pos);

        let agent = self.state.agent_pos;
        let collided = self.in_collision();
        let next_target_distance = agent.distance(config.target);
        let reached = !collided && next_target_distance <= config.goal_radius;
        self.state.status = if collided {
            Status::Collided
        } else if reached {
            Status::ReachedGoal
        } else if self.state.step_count >= config.max_steps {
            Status::TimedOut
        } else {
            Status::Running
        };

        let n_static = config.statics.len();
        let nearest = self
            .obstacle_discs()
            .enumerate()
            .map(|(i, (center, _))| (i, agent.distance(center)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let obstacle_distance = nearest.map(|(i, next)| {
            let before = if i < n_static {
                config.statics[i].center
            } else {
                prev_dynamics[i - n_static]
            };
            (prev_agent.distance(before), next)
        });

        Ok(StepEvents {
            collided,
            reached,
            status: self.state.status,
            prev_target_distance: prev_agent.distance(config.target),
            next_target_distance,
            obstacle_distance,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open_scene() -> Arc<SceneConfig> {
        let text = "\
bounds 0 0 400 400
agent 100 100
target 300 300
radius.goal 35
";
        Arc::new(SceneConfig::parse(text).unwrap())
    }

    #[test]
    fn reset_places_agent_at_start() {
        let world = World::reset(open_scene(), 3).unwrap();
        assert_eq!(world.state().agent_pos, Vec2::new(100.0, 100.0));
        assert_eq!(world.state().path_log.len(), 1);
        assert_eq!(world.status(), Status::Running);
    }

    #[test]
    fn full_action_moves_forty_units() {
        let mut world = World::reset(open_scene(), 0).unwrap();
        world.step([1.0, 1.0]).unwrap();
        assert_eq!(world.state().agent_pos, Vec2::new(140.0, 140.0));
        world.step([0.0, 0.0]).unwrap();
        assert_eq!(world.state().agent_pos, Vec2::new(140.0, 140.0));
    }

    #[test]
    fn displacement_clamps_at_bounds_without_collision() {
        let text = "bounds 0 0 100 100\nagent 90 50\ntarget 10 50\n";
        let mut world = World::reset(Arc::new(SceneConfig::parse(text).unwrap()), 0).unwrap();
        let events = world.step([1.0, 0.0]).unwrap();
        assert_eq!(world.state().agent_pos, Vec2::new(100.0, 50.0));
        assert!(!events.collided);
        assert_eq!(events.status, Status::Running);
    }

    #[test]
    fn reaching_goal_within_radius() {
        let text = "bounds 0 0 400 400\nagent 100 100\ntarget 130 100\nradius.goal 35\n";
        let mut world = World::reset(Arc::new(SceneConfig::parse(text).unwrap()), 0).unwrap();
        let events = world.step([0.1, 0.0]).unwrap();
        assert!(events.reached);
        assert_eq!(world.status(), Status::ReachedGoal);
        assert_eq!(
            world.step([0.0, 0.0]),
            Err(WorldError::Terminal(Status::ReachedGoal))
        );
    }

    #[test]
    fn collision_takes_precedence_and_reports_distances() {
        let text =
            "bounds 0 0 400 400\nagent 100 100\ntarget 150 100\nradius.goal 35\nstatic 150 110 5\n";
        let mut world = World::reset(Arc::new(SceneConfig::parse(text).unwrap()), 0).unwrap();
        let events = world.step([1.0, 0.0]).unwrap();
        assert!(events.collided);
        assert!(!events.reached);
        assert_eq!(events.status, Status::Collided);
        let (before, after) = events.obstacle_distance.unwrap();
        assert!((before - 50.0_f64.hypot(10.0)).abs() < 1e-12);
        assert!((after - 10.0_f64.hypot(10.0)).abs() < 1e-12);
    }

    #[test]
    fn times_out_at_max_steps() {
        let text = "bounds 0 0 400 400\nagent 100 100\ntarget 300 300\nmax_steps 3\n";
        let mut world = World::reset(Arc::new(SceneConfig::parse(text).unwrap()), 0).unwrap();
        for expected in [Status::Running, Status::Running, Status::TimedOut] {
            assert_eq!(world.step([0.0, 0.0]).unwrap().status, expected);
        }
        assert_eq!(world.state().path_log.len(), 4);
    }

    #[test]
    fn rejects_non_finite_action() {
        let mut world = World::reset(open_scene(), 0).unwrap();
        assert!(matches!(
            world.step([f64::NAN, 0.0]),
            Err(WorldError::InvalidAction(_))
        ));
    }

    #[test]
    fn observation_offsets() {
        let text = "\
bounds 0 0 400 400
agent 10 10
target 50 40
k_static 2
k_dynamic 2
static 30 10 5
dynamic
  start 100 100
  special 200 200
  speed 1 1
  dwell 0 0
end
";
        let world = World::reset(Arc::new(SceneConfig::parse(text).unwrap()), 0).unwrap();
        let obs = build_observation(&world, &[Vec2::new(15.0, 18.0)]).unwrap();
        let diag = 400.0_f64.hypot(400.0);
        assert_eq!(
            obs.values(),
            &[40.0, 30.0, 20.0, 0.0, diag, diag, 5.0, 8.0, diag, diag]
        );
        assert!(matches!(
            build_observation(&world, &[]),
            Err(WorldError::PredictionCount {
                expected: 1,
                found: 0
            })
        ));
    }
}
