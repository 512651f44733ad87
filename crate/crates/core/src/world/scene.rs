//! Scene definitions and the scene-file parser.
//!
//! ```text
//! bounds 0 0 1000 400          # min_x min_y max_x max_y
//! agent 60 200
//! target 940 200
//! radius.agent 10
//! radius.goal 20
//! radius.obstacle 12           # default radius for obstacles without one
//! max_steps 200
//! k_static 6
//! k_dynamic 5
//! horizon 5
//! fit_window 8
//! static 300 120 18            # x y [r]
//! dynamic
//!   start 500 40
//!   r 14
//!   special 500 360
//!   special 500 40
//!   speed 3 6
//!   dwell 2 8
//! end
//! ```

use thiserror::Error;

use crate::geometry::{Bounds, Vec2};
use crate::kv::{self, Line, ParseError};
use crate::predictor::{DEFAULT_FIT_WINDOW, DEFAULT_HORIZON};

pub const DEFAULT_AGENT_RADIUS: f64 = 10.0;
pub const DEFAULT_OBSTACLE_RADIUS: f64 = 12.0;
pub const DEFAULT_GOAL_RADIUS: f64 = 20.0;
pub const DEFAULT_MAX_STEPS: usize = 200;
pub const DEFAULT_K_STATIC: usize = 6;
pub const DEFAULT_K_DYNAMIC: usize = 5;

const SCENE1: &str = include_str!("../../scenes/scene1.scene");
const SCENE2: &str = include_str!("../../scenes/scene2.scene");
const SQUARE: &str = include_str!("../../scenes/square.scene");

/// Names of the scenes compiled into the crate.
pub const BUNDLED_SCENES: [&str; 3] = ["scene1", "scene2", "square"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("scene parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("invalid scene: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticObstacle {
    pub center: Vec2,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicObstacleSpec {
    pub start: Vec2,
    pub radius: f64,
    /// Visited in cyclic order.
    pub special_locations: Vec<Vec2>,
    /// Inclusive `[v_min, v_max]`, world units per step.
    pub speed_range: (f64, f64),
    /// Inclusive `[t_min, t_max]`, steps.
    pub dwell_range: (u32, u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub name: String,
    pub bounds: Bounds,
    pub agent_start: Vec2,
    pub agent_radius: f64,
    pub target: Vec2,
    pub goal_radius: f64,
    pub max_steps: usize,
    pub statics: Vec<StaticObstacle>,
    pub dynamics: Vec<DynamicObstacleSpec>,
    pub k_static: usize,
    pub k_dynamic: usize,
    /// Prediction horizon N.
    pub horizon: usize,
    /// Positions kept per obstacle for trajectory fitting.
    pub fit_window: usize,
}

impl SceneConfig {
    /// Length of every observation vector built for this scene.
    pub fn state_dim(&self) -> usize {
        2 * (1 + self.k_static + self.k_dynamic)
    }

    /// Checks every structural invariant, naming the first one violated.
    pub fn validate(&self) -> Result<(), SceneError> {
        let invalid = |msg: String| Err(SceneError::Invalid(msg));
        let b = self.bounds;
        if !(b.min.is_finite() && b.max.is_finite() && b.max.x > b.min.x && b.max.y > b.min.y) {
            return invalid("bounds must have max > min on both axes".into());
        }
        if !b.contains(self.agent_start) {
            return invalid("agent_start must lie inside bounds".into());
        }
        if !b.contains(self.target) {
            return invalid("target must lie inside bounds".into());
        }
        if !(self.agent_radius > 0.0) {
            return invalid("agent radius must be > 0".into());
        }
        if !(self.goal_radius > 0.0) {
            return invalid("goal radius must be > 0".into());
        }
        if self.max_steps < 1 {
            return invalid("max_steps must be >= 1".into());
        }
        if self.horizon < 1 {
            return invalid("horizon must be >= 1".into());
        }
        if self.fit_window < 2 {
            return invalid("fit_window must be >= 2".into());
        }
        for (i, s) in self.statics.iter().enumerate() {
            if !b.contains(s.center) {
                return invalid(format!(
                    "static obstacle {i}: center must lie inside bounds"
                ));
            }
            if !(s.radius > 0.0) {
                return invalid(format!("static obstacle {i}: radius must be > 0"));
            }
        }
        for (i, d) in self.dynamics.iter().enumerate() {
            if !b.contains(d.start) {
                return invalid(format!(
                    "dynamic obstacle {i}: start must lie inside bounds"
                ));
            }
            if !(d.radius > 0.0) {
                return invalid(format!("dynamic obstacle {i}: radius must be > 0"));
            }
            if d.special_locations.is_empty() {
                return invalid(format!(
                    "dynamic obstacle {i}: needs at least one special location"
                ));
            }
            if d.special_locations.iter().any(|p| !b.contains(*p)) {
                return invalid(format!(
                    "dynamic obstacle {i}: special locations must lie inside bounds"
                ));
            }
            let (v_min, v_max) = d.speed_range;
            if !(v_min > 0.0 && v_min <= v_max && v_max.is_finite()) {
                return invalid(format!(
                    "dynamic obstacle {i}: speed range needs 0 < v_min <= v_max"
                ));
            }
            let (t_min, t_max) = d.dwell_range;
            if t_min > t_max {
                return invalid(format!(
                    "dynamic obstacle {i}: dwell range needs t_min <= t_max"
                ));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, SceneError> {
        parse_scene(text, "unnamed")
    }

    /// Looks up one of [`BUNDLED_SCENES`].
    pub fn bundled(name: &str) -> Option<Self> {
        let text = match name {
            "scene1" => SCENE1,
            "scene2" => SCENE2,
            "square" => SQUARE,
            _ => return None,
        };
        Some(parse_scene(text, name).expect("bundled scenes are valid"))
    }
}

/// Parses and validates a scene file.
pub fn load_scene(text: &str, name: &str) -> Result<SceneConfig, SceneError> {
    parse_scene(text, name)
}

#[derive(Default)]
struct DynamicDraft {
    opened_at: usize,
    start: Option<Vec2>,
    radius: Option<f64>,
    special: Vec<Vec2>,
    speed: Option<(f64, f64)>,
    dwell: Option<(u32, u32)>,
}

impl DynamicDraft {
    fn finish(self, default_radius: f64) -> Result<DynamicObstacleSpec, ParseError> {
        let missing = |what: &str| {
            ParseError::new(self.opened_at, format!("dynamic block is missing `{what}`"))
        };
        Ok(DynamicObstacleSpec {
            start: self.start.ok_or_else(|| missing("start"))?,
            radius: self.radius.unwrap_or(default_radius),
            special_locations: if self.special.is_empty() {
                return Err(missing("special"));
            } else {
                self.special
            },
            speed_range: self.speed.ok_or_else(|| missing("speed"))?,
            dwell_range: self.dwell.ok_or_else(|| missing("dwell"))?,
        })
    }
}

fn point(line: &Line<'_>) -> Result<Vec2, ParseError> {
    line.expect_args(2)?;
    Ok(Vec2::new(line.float(0)?, line.float(1)?))
}

fn parse_scene(text: &str, name: &str) -> Result<SceneConfig, SceneError> {
    let mut bounds = None;
    let mut agent = None;
    let mut target = None;
    let mut agent_radius = DEFAULT_AGENT_RADIUS;
    let mut goal_radius = DEFAULT_GOAL_RADIUS;
    let mut obstacle_radius = DEFAULT_OBSTACLE_RADIUS;
    let mut max_steps = DEFAULT_MAX_STEPS;
    let mut k_static = DEFAULT_K_STATIC;
    let mut k_dynamic = DEFAULT_K_DYNAMIC;
    let mut horizon = DEFAULT_HORIZON;
    let mut fit_window = DEFAULT_FIT_WINDOW;
    // Radii may be given before `radius.obstacle` is set, so resolve late.
    let mut statics: Vec<(Vec2, Option<f64>)> = Vec::new();
    let mut dynamics: Vec<DynamicDraft> = Vec::new();
    let mut open: Option<DynamicDraft> = None;
    let mut last_line = 0;

    for line in kv::lines(text) {
        last_line = line.number;
        if let Some(draft) = open.as_mut() {
            match line.key {
                "start" => draft.start = Some(point(&line)?),
                "r" => draft.radius = Some(line.single_float()?),
                "special" => draft.special.push(point(&line)?),
                "speed" => {
                    line.expect_args(2)?;
                    draft.speed = Some((line.float(0)?, line.float(1)?));
                }
                "dwell" => {
                    line.expect_args(2)?;
                    draft.dwell = Some((line.arg(0)?, line.arg(1)?));
                }
                "end" => {
                    line.expect_args(0)?;
                    dynamics.push(open.take().expect("block is open"));
                }
                other => {
                    return Err(line
                        .error(format!("unexpected `{other}` inside dynamic block"))
                        .into())
                }
            }
            continue;
        }
        match line.key {
            "bounds" => {
                line.expect_args(4)?;
                bounds = Some(Bounds::new(
                    Vec2::new(line.float(0)?, line.float(1)?),
                    Vec2::new(line.float(2)?, line.float(3)?),
                ));
            }
            "agent" => agent = Some(point(&line)?),
            "target" => target = Some(point(&line)?),
            "radius.agent" => agent_radius = line.single_float()?,
            "radius.goal" => goal_radius = line.single_float()?,
            "radius.obstacle" => obstacle_radius = line.single_float()?,
            "max_steps" => max_steps = line.single()?,
            "k_static" => k_static = line.single()?,
            "k_dynamic" => k_dynamic = line.single()?,
            "horizon" => horizon = line.single()?,
            "fit_window" => fit_window = line.single()?,
            "static" => {
                if !(line.args.len() == 2 || line.args.len() == 3) {
                    return Err(line.error("`static` expects `x y [r]`").into());
                }
                let center = Vec2::new(line.float(0)?, line.float(1)?);
                let radius = if line.args.len() == 3 {
                    Some(line.float(2)?)
                } else {
                    None
                };
                statics.push((center, radius));
            }
            "dynamic" => {
                line.expect_args(0)?;
                open = Some(DynamicDraft {
                    opened_at: line.number,
                    ..DynamicDraft::default()
                });
            }
            "end" => return Err(line.error("`end` without an open `dynamic` block").into()),
            other => return Err(line.error(format!("unknown key `{other}`")).into()),
        }
    }
    if let Some(draft) = open {
        return Err(ParseError::new(
            draft.opened_at.max(last_line),
            "unterminated `dynamic` block (missing `end`)",
        )
        .into());
    }

    let required =
        |what: &str| ParseError::new(last_line.max(1), format!("missing required key `{what}`"));
    let config = SceneConfig {
        name: name.to_string(),
        bounds: bounds.ok_or_else(|| required("bounds"))?,
        agent_start: agent.ok_or_else(|| required("agent"))?,
        agent_radius,
        target: target.ok_or_else(|| required("target"))?,
        goal_radius,
        max_steps,
        statics: statics
            .into_iter()
            .map(|(center, radius)| StaticObstacle {
                center,
                radius: radius.unwrap_or(obstacle_radius),
            })
            .collect(),
        dynamics: dynamics
            .into_iter()
            .map(|d| d.finish(obstacle_radius))
            .collect::<Result<_, _>>()?,
        k_static,
        k_dynamic,
        horizon,
        fit_window,
    };
    config.validate()?;
    Ok(config)
}
