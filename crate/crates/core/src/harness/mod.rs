//! Experiment engine: metrics, evaluation, comparison runs, CSV output and
//! the command-line front end.

pub mod cli;
mod compare;
mod evaluate;
mod exec;
pub mod io;
mod metrics;

pub use compare::{
    run_compare, CellFailure, CellResult, CompareReport, CompareSpec, GroupRow, MeanStd,
    DEFAULT_EVAL_EPISODES,
};
pub use evaluate::{eval_seeds, evaluate, rollout, Frame};
pub use exec::Execution;
pub use metrics::{
    accuracy_rate, path_length, reward_curve, summarize, trailing_accuracy, turning_angle,
    EpisodeLog, MetricsError, MetricsSummary, DEFAULT_ACCURACY_WINDOW,
};
