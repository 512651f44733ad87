//! Fixed-length observation vectors.
//!
//! Layout, as `(dx, dy)` pairs of `other - agent`:
//!
//! ```text
//! [ target | k_static nearest statics | k_dynamic nearest dynamics ]
//! ```
//!
//! Dynamic slots hold whatever per-obstacle positions the caller supplies:
//! predicted horizon endpoints for the prediction-augmented agent, current
//! positions for the baselines. Unfilled slots carry the sentinel offset
//! `(diag, diag)` where `diag` is the length of the bounds diagonal.

use crate::geometry::Vec2;

use super::{World, WorldError};

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    values: Vec<f64>,
}

impl StateVector {
    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Offset pair stored in slot `i` (slot 0 is the target).
    pub fn slot(&self, i: usize) -> Vec2 {
        Vec2::new(self.values[2 * i], self.values[2 * i + 1])
    }
}

/// Indices of the `k` points nearest to `origin`, ties to the lower index.
pub fn k_nearest(origin: Vec2, points: &[Vec2], k: usize) -> Vec<usize> {
    let mut order: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (origin.distance(*p), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    order.into_iter().take(k).map(|(_, i)| i).collect()
}

fn push_slots(values: &mut Vec<f64>, agent: Vec2, points: &[Vec2], k: usize, sentinel: f64) {
    let chosen = k_nearest(agent, points, k);
    for &i in &chosen {
        let offset = points[i] - agent;
        values.push(offset.x);
        values.push(offset.y);
    }
    for _ in chosen.len()..k {
        values.push(sentinel);
        values.push(sentinel);
    }
}

/// Builds the observation for `world`, using `dynamic_points` (one per
/// dynamic obstacle) for the dynamic slots.
pub fn build_observation(
    world: &World,
    dynamic_points: &[Vec2],
) -> Result<StateVector, WorldError> {
    let config = world.config();
    if dynamic_points.len() != config.dynamics.len() {
        return Err(WorldError::PredictionCount {
            expected: config.dynamics.len(),
            found: dynamic_points.len(),
        });
    }
    let agent = world.state().agent_pos;
    let sentinel = config.bounds.diagonal();
    let mut values = Vec::with_capacity(config.state_dim());
    let to_target = config.target - agent;
    values.push(to_target.x);
    values.push(to_target.y);

    let statics: Vec<Vec2> = config.statics.iter().map(|s| s.center).collect();
    push_slots(&mut values, agent, &statics, config.k_static, sentinel);
    push_slots(
        &mut values,
        agent,
        dynamic_points,
        config.k_dynamic,
        sentinel,
    );
    debug_assert_eq!(values.len(), config.state_dim());
    Ok(StateVector { values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_ties_prefer_lower_index() {
        let pts = [
            Vec2::new(5.0, 0.0),
            Vec2::new(0.0, 5.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(-5.0, 0.0),
        ];
        assert_eq!(k_nearest(Vec2::ZERO, &pts, 3), vec![2, 0, 1]);
        assert_eq!(k_nearest(Vec2::ZERO, &pts, 10).len(), 4);
    }
}
