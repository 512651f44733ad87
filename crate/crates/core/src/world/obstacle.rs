//! Scripted dynamic obstacles.
//!
//! An obstacle travels in a straight line at a fixed speed toward its current
//! special location, dwells there for a random number of steps, then heads
//! for the next location (cyclically) at a freshly drawn speed.

use rand::Rng;

use crate::geometry::Vec2;
use crate::predictor::HistoryBuffer;

use super::scene::DynamicObstacleSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObstacleMode {
    Moving { target_index: usize, speed: f64 },
    Dwelling { remaining: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleState {
    pub position: Vec2,
    pub mode: ObstacleMode,
    /// Index of the special location most recently targeted.
    pub target_index: usize,
    pub history: HistoryBuffer,
}

pub fn draw_speed<R: Rng + ?Sized>(spec: &DynamicObstacleSpec, rng: &mut R) -> f64 {
    let (lo, hi) = spec.speed_range;
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

pub fn draw_dwell<R: Rng + ?Sized>(spec: &DynamicObstacleSpec, rng: &mut R) -> u32 {
    let (lo, hi) = spec.dwell_range;
    rng.random_range(lo..=hi)
}

impl ObstacleState {
    /// Fresh obstacle at its start, heading for the first special location.
    pub fn spawn<R: Rng + ?Sized>(
        spec: &DynamicObstacleSpec,
        history_capacity: usize,
        rng: &mut R,
    ) -> Self {
        let mut history = HistoryBuffer::new(history_capacity);
        history.record(spec.start);
        Self {
            position: spec.start,
            mode: ObstacleMode::Moving {
                target_index: 0,
                speed: draw_speed(spec, rng),
            },
            target_index: 0,
            history,
        }
    }

    fn depart<R: Rng + ?Sized>(&mut self, spec: &DynamicObstacleSpec, rng: &mut R) {
        let next = (self.target_index + 1) % spec.special_locations.len();
        self.target_index = next;
        self.mode = ObstacleMode::Moving {
            target_index: next,
            speed: draw_speed(spec, rng),
        };
    }

    /// Advances the script by one step and records the new position.
    pub fn advance<R: Rng + ?Sized>(&mut self, spec: &DynamicObstacleSpec, rng: &mut R) {
        match self.mode {
            ObstacleMode::Moving {
                target_index,
                speed,
            } => {
                let goal = spec.special_locations[target_index];
                let offset = goal - self.position;
                let distance = offset.norm();
                if distance <= speed {
                    self.position = goal;
                    match draw_dwell(spec, rng) {
                        0 => self.depart(spec, rng),
                        remaining => self.mode = ObstacleMode::Dwelling { remaining },
                    }
                } else {
                    self.position += offset * (speed / distance);
                }
            }
            ObstacleMode::Dwelling { remaining } => {
                if remaining <= 1 {
                    self.depart(spec, rng);
                } else {
                    self.mode = ObstacleMode::Dwelling {
                        remaining: remaining - 1,
                    };
                }
            }
        }
        self.history.record(self.position);
    }

    pub fn speed(&self) -> Option<f64> {
        match self.mode {
            ObstacleMode::Moving { speed, .. } => Some(speed),
            ObstacleMode::Dwelling { .. } => None,
        }
    }
}
