//! Planar path planning around moving obstacles: a receding-horizon
//! predictor for obstacle motion feeding an actor-critic agent, with
//! actor-critic and Q-learning baselines, reward shaping, benchmark scenes
//! and an experiment harness.

pub mod ddpg;
pub mod geometry;
pub mod harness;
pub mod kv;
pub mod neural;
pub mod predictor;
pub mod shaping;
pub mod world;

use thiserror::Error;

/// Any failure surfaced by training, evaluation or the command line.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    World(#[from] world::WorldError),
    #[error(transparent)]
    Scene(#[from] world::SceneError),
    #[error(transparent)]
    Predictor(#[from] predictor::PredictorError),
    #[error(transparent)]
    Shaping(#[from] shaping::ShapingError),
    #[error(transparent)]
    Learning(#[from] ddpg::DdpgError),
    #[error(transparent)]
    Neural(#[from] neural::NeuralError),
    #[error(transparent)]
    Parse(#[from] kv::ParseError),
    #[error(transparent)]
    Metrics(#[from] harness::MetricsError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Config(String),
}
