//! Hyperparameters and the experiment config file.
//!
//! The config file uses the same key/value syntax as scene files. Every key
//! is optional; missing keys keep their defaults.
//!
//! ```text
//! gamma 0.99
//! tau 0.005
//! batch_size 64
//! buffer_capacity 100000
//! warmup_steps 1000
//! updates_per_step 1
//! actor_lr 0.0001
//! critic_lr 0.001
//! hidden 64 64
//! obs_scale 0.005
//! noise.start 0.3
//! noise.end 0.05
//! noise.decay_fraction 0.5
//! dqn.lr 0.001
//! dqn.target_sync 250
//! dqn.epsilon_start 0.3
//! dqn.epsilon_end 0.05
//! reward.L 5
//! reward.l 0.5
//! reward.H 5
//! reward.h 0.5
//! reward.weights 1 -1 1 1
//! reward.influence_radius 120
//! predictor.rho 0.01
//! predictor.u_max 5
//! ```

use std::fmt::Write as _;

use crate::kv::{self, ParseError};
use crate::predictor::{PredictorConfig, DEFAULT_CONTROL_PENALTY, DEFAULT_U_MAX};
use crate::shaping::RewardConfig;
use crate::world::SceneConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub gamma: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Exploration noise std at the start of training.
    pub noise_start: f64,
    /// Exploration noise std once decay finishes.
    pub noise_end: f64,
    /// Fraction of training episodes over which noise decays linearly.
    pub noise_decay_fraction: f64,
    pub warmup_steps: usize,
    pub updates_per_step: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub hidden: Vec<usize>,
    /// Multiplies raw observation offsets before they reach a network.
    pub obs_scale: f64,
    pub dqn_lr: f64,
    /// Learning steps between hard copies into the DQN target network.
    pub dqn_target_sync: u64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            tau: 0.005,
            batch_size: 64,
            buffer_capacity: 100_000,
            noise_start: 0.3,
            noise_end: 0.05,
            noise_decay_fraction: 0.5,
            warmup_steps: 1000,
            updates_per_step: 1,
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            hidden: vec![64, 64],
            obs_scale: 0.005,
            dqn_lr: 1e-3,
            dqn_target_sync: 250,
            epsilon_start: 0.3,
            epsilon_end: 0.05,
        }
    }
}

impl AgentConfig {
    /// Linear decay from `start` to `end` over the first
    /// `noise_decay_fraction` of training; `progress` is in `[0, 1]`.
    pub fn decayed(&self, start: f64, end: f64, progress: f64) -> f64 {
        if self.noise_decay_fraction <= 0.0 {
            return end;
        }
        let t = (progress / self.noise_decay_fraction).clamp(0.0, 1.0);
        start * (1.0 - t) + end * t
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err("gamma must lie in [0, 1)".into());
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err("tau must lie in [0, 1]".into());
        }
        if self.batch_size == 0 || self.buffer_capacity == 0 {
            return Err("batch_size and buffer_capacity must be positive".into());
        }
        if self.noise_start < 0.0 || self.noise_end < 0.0 {
            return Err("noise std must be >= 0".into());
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_end) {
            return Err("epsilon must lie in [0, 1]".into());
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0 && self.dqn_lr > 0.0) {
            return Err("learning rates must be positive".into());
        }
        if self.hidden.iter().any(|h| *h == 0) {
            return Err("hidden layer widths must be positive".into());
        }
        if !(self.obs_scale > 0.0 && self.obs_scale.is_finite()) {
            return Err("obs_scale must be positive".into());
        }
        if self.dqn_target_sync == 0 {
            return Err("dqn.target_sync must be positive".into());
        }
        Ok(())
    }
}

/// Everything tunable about a training run apart from the scene.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub agent: AgentConfig,
    pub reward: RewardConfig,
    pub control_penalty: f64,
    pub u_max: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            agent: AgentConfig::default(),
            reward: RewardConfig::default(),
            control_penalty: DEFAULT_CONTROL_PENALTY,
            u_max: DEFAULT_U_MAX,
        }
    }
}

impl ExperimentConfig {
    /// Predictor settings: horizon and fit window come from the scene.
    pub fn predictor(&self, scene: &SceneConfig) -> PredictorConfig {
        PredictorConfig {
            horizon: scene.horizon,
            fit_window: scene.fit_window,
            control_penalty: self.control_penalty,
            u_max: self.u_max,
        }
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut cfg = Self::default();
        let mut last = 1;
        for line in kv::lines(text) {
            last = line.number;
            let a = &mut cfg.agent;
            let r = &mut cfg.reward;
            match line.key {
                "gamma" => a.gamma = line.single_float()?,
                "tau" => a.tau = line.single_float()?,
                "batch_size" => a.batch_size = line.single()?,
                "buffer_capacity" => a.buffer_capacity = line.single()?,
                "warmup_steps" => a.warmup_steps = line.single()?,
                "updates_per_step" => a.updates_per_step = line.single()?,
                "actor_lr" => a.actor_lr = line.single_float()?,
                "critic_lr" => a.critic_lr = line.single_float()?,
                "hidden" => {
                    a.hidden = (0..line.args.len())
                        .map(|i| line.arg(i))
                        .collect::<Result<_, _>>()?
                }
                "obs_scale" => a.obs_scale = line.single_float()?,
                "noise.start" => a.noise_start = line.single_float()?,
                "noise.end" => a.noise_end = line.single_float()?,
                "noise.decay_fraction" => a.noise_decay_fraction = line.single_float()?,
                "dqn.lr" => a.dqn_lr = line.single_float()?,
                "dqn.target_sync" => a.dqn_target_sync = line.single()?,
                "dqn.epsilon_start" => a.epsilon_start = line.single_float()?,
                "dqn.epsilon_end" => a.epsilon_end = line.single_float()?,
                "reward.L" => r.attraction_max = line.single_float()?,
                "reward.l" => r.attraction_min = line.single_float()?,
                "reward.H" => r.repulsion_max = line.single_float()?,
                "reward.h" => r.repulsion_min = line.single_float()?,
                "reward.weights" => {
                    line.expect_args(4)?;
                    for (i, w) in r.weights.iter_mut().enumerate() {
                        *w = line.float(i)?;
                    }
                }
                "reward.influence_radius" => r.influence_radius = line.single_float()?,
                "predictor.rho" => cfg.control_penalty = line.single_float()?,
                "predictor.u_max" => cfg.u_max = line.single_float()?,
                other => return Err(line.error(format!("unknown config key `{other}`"))),
            }
        }
        cfg.agent.validate().map_err(|m| ParseError::new(last, m))?;
        cfg.reward
            .validate()
            .map_err(|e| ParseError::new(last, e.to_string()))?;
        if !(cfg.control_penalty >= 0.0 && cfg.u_max >= 0.0) {
            return Err(ParseError::new(
                last,
                "predictor.rho and predictor.u_max must be >= 0",
            ));
        }
        Ok(cfg)
    }

    /// Renders every key; `parse(to_text())` reproduces `self` exactly.
    pub fn to_text(&self) -> String {
        let a = &self.agent;
        let r = &self.reward;
        let mut s = String::new();
        let hidden: Vec<String> = a.hidden.iter().map(|h| h.to_string()).collect();
        let _ = writeln!(s, "gamma {}", a.gamma);
        let _ = writeln!(s, "tau {}", a.tau);
        let _ = writeln!(s, "batch_size {}", a.batch_size);
        let _ = writeln!(s, "buffer_capacity {}", a.buffer_capacity);
        let _ = writeln!(s, "warmup_steps {}", a.warmup_steps);
        let _ = writeln!(s, "updates_per_step {}", a.updates_per_step);
        let _ = writeln!(s, "actor_lr {}", a.actor_lr);
        let _ = writeln!(s, "critic_lr {}", a.critic_lr);
        let _ = writeln!(s, "hidden {}", hidden.join(" "));
        let _ = writeln!(s, "obs_scale {}", a.obs_scale);
        let _ = writeln!(s, "noise.start {}", a.noise_start);
        let _ = writeln!(s, "noise.end {}", a.noise_end);
        let _ = writeln!(s, "noise.decay_fraction {}", a.noise_decay_fraction);
        let _ = writeln!(s, "dqn.lr {}", a.dqn_lr);
        let _ = writeln!(s, "dqn.target_sync {}", a.dqn_target_sync);
        let _ = writeln!(s, "dqn.epsilon_start {}", a.epsilon_start);
        let _ = writeln!(s, "dqn.epsilon_end {}", a.epsilon_end);
        let _ = writeln!(s, "reward.L {}", r.attraction_max);
        let _ = writeln!(s, "reward.l {}", r.attraction_min);
        let _ = writeln!(s, "reward.H {}", r.repulsion_max);
        let _ = writeln!(s, "reward.h {}", r.repulsion_min);
        let _ = writeln!(
            s,
            "reward.weights {} {} {} {}",
            r.weights[0], r.weights[1], r.weights[2], r.weights[3]
        );
        let _ = writeln!(s, "reward.influence_radius {}", r.influence_radius);
        let _ = writeln!(s, "predictor.rho {}", self.control_penalty);
        let _ = writeln!(s, "predictor.u_max {}", self.u_max);
        s
    }
}
