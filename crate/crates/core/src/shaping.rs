//! Potential-field style reward shaping.
//!
//! Progress toward the target and distance changes to the nearest obstacle
//! are rewarded with values clamped into `[l, L]` / `[h, H]` (by magnitude,
//! with the sign of the change), plus fixed collision and goal terms. The
//! total is a weighted sum of the four parts.

use thiserror::Error;

use crate::world::StepEvents;

pub const COLLISION_REWARD: f64 = -50.0;
pub const GOAL_REWARD: f64 = 200.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShapingError {
    #[error("a step cannot both collide and reach the goal")]
    CollidedAndReached,
    #[error("invalid reward config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardConfig {
    /// Attraction clamp, upper magnitude.
    pub attraction_max: f64,
    /// Attraction clamp, lower magnitude.
    pub attraction_min: f64,
    pub repulsion_max: f64,
    pub repulsion_min: f64,
    /// Weights of (attraction, repulsion, collision, goal).
    pub weights: [f64; 4],
    /// Obstacles farther than this (world units) contribute no repulsion.
    pub influence_radius: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            attraction_max: 5.0,
            attraction_min: 0.5,
            repulsion_max: 5.0,
            repulsion_min: 0.5,
            weights: [1.0, -1.0, 1.0, 1.0],
            influence_radius: 120.0,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), ShapingError> {
        if !(self.attraction_max > self.attraction_min && self.attraction_min > 0.0) {
            return Err(ShapingError::InvalidConfig("attraction needs L > l > 0"));
        }
        if !(self.repulsion_max > self.repulsion_min && self.repulsion_min > 0.0) {
            return Err(ShapingError::InvalidConfig("repulsion needs H > h > 0"));
        }
        if !self.weights.iter().all(|w| w.is_finite()) {
            return Err(ShapingError::InvalidConfig("weights must be finite"));
        }
        if !(self.influence_radius >= 0.0) {
            return Err(ShapingError::InvalidConfig("influence radius must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRewardBreakdown {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub r4: f64,
    pub total: f64,
}

/// Sign-dispatched two-sided clamp: non-negative changes land in `[lo, hi]`,
/// negative ones in `[-hi, -lo]`.
fn clamped_change(delta: f64, lo: f64, hi: f64) -> f64 {
    if delta >= 0.0 {
        delta.clamp(lo, hi)
    } else {
        delta.clamp(-hi, -lo)
    }
}

/// `r1` from the distances to the target before and after a step.
pub fn attraction_reward(d_prev: f64, d_next: f64, cfg: &RewardConfig) -> f64 {
    clamped_change(d_prev - d_next, cfg.attraction_min, cfg.attraction_max)
}

/// `r2` from the distances to the nearest obstacle before and after a step.
pub fn repulsion_reward(d_prev: f64, d_next: f64, cfg: &RewardConfig) -> f64 {
    if d_next > cfg.influence_radius {
        return 0.0;
    }
    clamped_change(d_prev - d_next, cfg.repulsion_min, cfg.repulsion_max)
}

/// `(r3, r4)`.
pub fn terminal_rewards(collided: bool, reached: bool) -> Result<(f64, f64), ShapingError> {
    match (collided, reached) {
        (true, true) => Err(ShapingError::CollidedAndReached),
        (true, false) => Ok((COLLISION_REWARD, 0.0)),
        (false, true) => Ok((0.0, GOAL_REWARD)),
        (false, false) => Ok((0.0, 0.0)),
    }
}

pub fn total_reward(r1: f64, r2: f64, r3: f64, r4: f64, cfg: &RewardConfig) -> StepRewardBreakdown {
    let [w1, w2, w3, w4] = cfg.weights;
    StepRewardBreakdown {
        r1,
        r2,
        r3,
        r4,
        total: w1 * r1 + w2 * r2 + w3 * r3 + w4 * r4,
    }
}

/// Full shaped reward for one world step.
pub fn step_reward(
    events: &StepEvents,
    cfg: &RewardConfig,
) -> Result<StepRewardBreakdown, ShapingError> {
    let r1 = attraction_reward(
        events.prev_target_distance,
        events.next_target_distance,
        cfg,
    );
    let r2 = events
        .obstacle_distance
        .map_or(0.0, |(before, after)| repulsion_reward(before, after, cfg));
    let (r3, r4) = terminal_rewards(events.collided, events.reached)?;
    Ok(total_reward(r1, r2, r3, r4, cfg))
}
