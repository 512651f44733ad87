//! Receding-horizon trajectory prediction for scripted obstacles.
//!
//! Each obstacle is modelled as a planar double integrator driven by a
//! control input held constant over the fit window:
//!
//! ```text
//! position(k+1) = position(k) + velocity(k)
//! velocity(k+1) = velocity(k) + control
//! output(k)     = position(k)
//! ```
//!
//! Fitting starts from the earliest buffered position with the velocity
//! given by the first difference of the history, then picks the control
//! minimising
//!
//! ```text
//! J(u) = sum_k |y_k - p_k|^2 + rho * (W - 1) * |u|^2
//! ```
//!
//! where `y_k` is the model rollout and `p_k` the observed positions. The
//! rollout is linear in `u`, so each axis has a closed-form minimiser; the
//! box constraint `|u_i| <= u_max` is separable per axis and is applied by
//! clamping that minimiser. Prediction restarts from the latest observed
//! position (feedback correction) with the fitted velocity there and rolls
//! the model forward over the horizon.

use std::collections::VecDeque;

use thiserror::Error;

use crate::geometry::Vec2;

pub const DEFAULT_HORIZON: usize = 5;
pub const DEFAULT_FIT_WINDOW: usize = 8;
pub const DEFAULT_CONTROL_PENALTY: f64 = 0.01;
pub const DEFAULT_U_MAX: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PredictorError {
    #[error("fitting needs at least 2 buffered positions, found {0}")]
    InsufficientHistory(usize),
    #[error("cannot predict from an empty history")]
    EmptyHistory,
    #[error("sequence length mismatch: predicted {predicted}, realized {realized}")]
    LengthMismatch { predicted: usize, realized: usize },
    #[error("invalid predictor config: {0}")]
    InvalidConfig(&'static str),
}

/// Bounded FIFO of observed positions, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryBuffer {
    positions: VecDeque<Vec2>,
    capacity: usize,
}

impl HistoryBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "history capacity must be positive");
        Self {
            positions: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn from_positions(capacity: usize, positions: impl IntoIterator<Item = Vec2>) -> Self {
        let mut buffer = Self::new(capacity);
        for p in positions {
            buffer.record(p);
        }
        buffer
    }

    /// Appends a position, evicting the oldest entry when full.
    pub fn record(&mut self, position: Vec2) {
        if self.positions.len() == self.capacity {
            self.positions.pop_front();
        }
        self.positions.push_back(position);
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn latest(&self) -> Option<Vec2> {
        self.positions.back().copied()
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = Vec2> + '_ {
        self.positions.iter().copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictorConfig {
    pub horizon: usize,
    pub fit_window: usize,
    /// Weight of the control-effort term.
    pub control_penalty: f64,
    /// Per-axis control bound, world units per step squared.
    pub u_max: f64,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            horizon: DEFAULT_HORIZON,
            fit_window: DEFAULT_FIT_WINDOW,
            control_penalty: DEFAULT_CONTROL_PENALTY,
            u_max: DEFAULT_U_MAX,
        }
    }
}

impl PredictorConfig {
    pub fn validate(&self) -> Result<(), PredictorError> {
        if self.horizon < 1 {
            return Err(PredictorError::InvalidConfig("horizon must be >= 1"));
        }
        if self.fit_window < 2 {
            return Err(PredictorError::InvalidConfig("fit_window must be >= 2"));
        }
        if !(self.control_penalty >= 0.0 && self.control_penalty.is_finite()) {
            return Err(PredictorError::InvalidConfig(
                "control_penalty must be >= 0",
            ));
        }
        if !(self.u_max >= 0.0 && self.u_max.is_finite()) {
            return Err(PredictorError::InvalidConfig("u_max must be >= 0"));
        }
        Ok(())
    }
}

/// Double-integrator state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicState {
    pub position: Vec2,
    pub velocity: Vec2,
}

impl KinematicState {
    pub fn step(self, control: Vec2) -> Self {
        Self {
            position: self.position + self.velocity,
            velocity: self.velocity + control,
        }
    }
}

/// Result of [`fit_controls`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedModel {
    /// State at the earliest buffered position.
    pub origin: KinematicState,
    /// Model state re-anchored at the latest observed position.
    pub current: KinematicState,
    /// Control applied at every step of the window.
    pub control: Vec2,
    /// Cost of `control` over the window.
    pub cost: f64,
    /// Number of buffered positions the fit used.
    pub window: usize,
}

impl FittedModel {
    /// The control sequence over the window (constant by construction).
    pub fn controls(&self) -> Vec<Vec2> {
        vec![self.control; self.window.saturating_sub(1)]
    }

    pub fn rollout(&self, steps: usize) -> Vec<Vec2> {
        let mut state = self.current;
        (0..steps)
            .map(|_| {
                state = state.step(self.control);
                state.position
            })
            .collect()
    }
}

/// Evaluates the fitting cost of a constant control by simulating the model
/// over the buffered window.
pub fn window_cost(history: &[Vec2], origin: KinematicState, control: Vec2, penalty: f64) -> f64 {
    let mut state = origin;
    let mut tracking = 0.0;
    for (k, observed) in history.iter().enumerate() {
        if k > 0 {
            state = state.step(control);
        }
        tracking += (state.position - *observed).norm_squared();
    }
    let transitions = history.len().saturating_sub(1) as f64;
    tracking + penalty * transitions * control.norm_squared()
}

pub fn fit_controls(
    buffer: &HistoryBuffer,
    cfg: &PredictorConfig,
) -> Result<FittedModel, PredictorError> {
    let n = buffer.len();
    if n < 2 {
        return Err(PredictorError::InsufficientHistory(n));
    }
    let history: Vec<Vec2> = buffer.iter().collect();
    let p0 = history[0];
    let v0 = history[1] - history[0];

    // Rollout from the origin: y_k = p0 + k v0 + c_k u with c_k = k(k-1)/2.
    let mut numerator = Vec2::ZERO;
    let mut curvature = 0.0;
    for (k, observed) in history.iter().enumerate().skip(2) {
        let kf = k as f64;
        let c = kf * (kf - 1.0) / 2.0;
        let residual = *observed - p0 - v0 * kf;
        numerator += residual * c;
        curvature += c * c;
    }
    let denominator = curvature + cfg.control_penalty * (n - 1) as f64;
    let control = if denominator > 0.0 {
        let raw = numerator * (1.0 / denominator);
        Vec2::new(
            raw.x.clamp(-cfg.u_max, cfg.u_max),
            raw.y.clamp(-cfg.u_max, cfg.u_max),
        )
    } else {
        Vec2::ZERO
    };

    let origin = KinematicState {
        position: p0,
        velocity: v0,
    };
    let cost = window_cost(&history, origin, control, cfg.control_penalty);
    let current = KinematicState {
        position: history[n - 1],
        velocity: v0 + control * (n - 1) as f64,
    };
    Ok(FittedModel {
        origin,
        current,
        control,
        cost,
        window: n,
    })
}

/// Predicts the next `cfg.horizon` positions.
///
/// A single buffered point yields the stationary fallback: that point
/// repeated over the horizon.
pub fn predict(buffer: &HistoryBuffer, cfg: &PredictorConfig) -> Result<Vec<Vec2>, PredictorError> {
    match buffer.len() {
        0 => Err(PredictorError::EmptyHistory),
        1 => Ok(vec![buffer.latest().expect("len checked"); cfg.horizon]),
        _ => Ok(fit_controls(buffer, cfg)?.rollout(cfg.horizon)),
    }
}

/// Horizon endpoint of [`predict`], the point fed into observations.
pub fn predict_endpoint(
    buffer: &HistoryBuffer,
    cfg: &PredictorConfig,
) -> Result<Vec2, PredictorError> {
    let path = predict(buffer, cfg)?;
    Ok(*path.last().expect("horizon >= 1"))
}

/// Mean pointwise Euclidean distance between two equal-length sequences.
pub fn prediction_error(predicted: &[Vec2], realized: &[Vec2]) -> Result<f64, PredictorError> {
    if predicted.len() != realized.len() {
        return Err(PredictorError::LengthMismatch {
            predicted: predicted.len(),
            realized: realized.len(),
        });
    }
    if predicted.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = predicted
        .iter()
        .zip(realized)
        .map(|(p, r)| p.distance(*r))
        .sum();
    Ok(total / predicted.len() as f64)
}
