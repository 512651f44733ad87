//! CSV files written by the command-line tool.
//!
//! | file | columns |
//! |------|---------|
//! | metrics | `episode,outcome,reward,steps,path_length,turning_angle_deg` |
//! | curve | `episode,accuracy,mean_reward` |
//! | trajectory | `episode,step,entity,x,y` (`entity` is `agent` or `obstacle<i>`) |
//! | rewards | `episode,step,r1,r2,r3,r4,R` |
//! | predictions | `episode,step,obstacle,k,pred_x,pred_y` |
//! | comparison | `scene,algo,seed,accuracy,mean_path_length,mean_turning_angle` |
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! yields bit-identical values.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::geometry::Vec2;
use crate::shaping::StepRewardBreakdown;
use crate::world::Status;
use crate::Error;

use super::compare::CellResult;
use super::evaluate::Frame;
use super::metrics::EpisodeLog;

pub const METRICS_HEADER: [&str; 6] = [
    "episode",
    "outcome",
    "reward",
    "steps",
    "path_length",
    "turning_angle_deg",
];
pub const CURVE_HEADER: [&str; 3] = ["episode", "accuracy", "mean_reward"];
pub const TRAJECTORY_HEADER: [&str; 5] = ["episode", "step", "entity", "x", "y"];
pub const REWARDS_HEADER: [&str; 7] = ["episode", "step", "r1", "r2", "r3", "r4", "R"];
pub const PREDICTIONS_HEADER: [&str; 6] = ["episode", "step", "obstacle", "k", "pred_x", "pred_y"];
pub const COMPARE_HEADER: [&str; 6] = [
    "scene",
    "algo",
    "seed",
    "accuracy",
    "mean_path_length",
    "mean_turning_angle",
];

/// One row of a metrics file.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub episode: usize,
    pub outcome: Status,
    pub reward: f64,
    pub steps: usize,
    pub path_length: f64,
    pub turning_angle_deg: f64,
}

impl From<&EpisodeLog> for MetricsRow {
    fn from(log: &EpisodeLog) -> Self {
        Self {
            episode: log.episode,
            outcome: log.outcome,
            reward: log.reward,
            steps: log.steps,
            path_length: log.path_length(),
            turning_angle_deg: log.turning_angle(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub episode: usize,
    pub step: usize,
    pub entity: String,
    pub x: f64,
    pub y: f64,
}

fn writer<W: Write>(out: W, header: &[&str]) -> Result<csv::Writer<W>, Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    Ok(w)
}

fn field<T>(record: &csv::StringRecord, index: usize, name: &str) -> Result<T, Error>
where
    T: FromStr,
{
    let raw = record
        .get(index)
        .ok_or_else(|| Error::Config(format!("csv row is missing `{name}`")))?;
    raw.parse()
        .map_err(|_| Error::Config(format!("csv field `{name}`: cannot parse `{raw}`")))
}

fn check_header<R: Read>(reader: &mut csv::Reader<R>, expected: &[&str]) -> Result<(), Error> {
    let header = reader.headers()?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::Config(format!(
            "unexpected csv header `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(())
}

pub fn write_metrics<W: Write>(out: W, logs: &[EpisodeLog]) -> Result<(), Error> {
    let mut w = writer(out, &METRICS_HEADER)?;
    for log in logs {
        let row = MetricsRow::from(log);
        w.write_record([
            row.episode.to_string(),
            row.outcome.as_str().to_string(),
            row.reward.to_string(),
            row.steps.to_string(),
            row.path_length.to_string(),
            row.turning_angle_deg.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics<R: Read>(input: R) -> Result<Vec<MetricsRow>, Error> {
    let mut reader = csv::Reader::from_reader(input);
    check_header(&mut reader, &METRICS_HEADER)?;
    reader
        .records()
        .map(|record| {
            let r = record?;
            let outcome: String = field(&r, 1, "outcome")?;
            Ok(MetricsRow {
                episode: field(&r, 0, "episode")?,
                outcome: Status::parse(&outcome)
                    .filter(|s| s.is_terminal())
                    .ok_or_else(|| Error::Config(format!("unknown outcome `{outcome}`")))?,
                reward: field(&r, 2, "reward")?,
                steps: field(&r, 3, "steps")?,
                path_length: field(&r, 4, "path_length")?,
                turning_angle_deg: field(&r, 5, "turning_angle_deg")?,
            })
        })
        .collect()
}

/// Sliding-window accuracy and mean reward per episode.
pub fn write_curve<W: Write>(out: W, accuracy: &[f64], mean_reward: &[f64]) -> Result<(), Error> {
    let mut w = writer(out, &CURVE_HEADER)?;
    for (i, (a, r)) in accuracy.iter().zip(mean_reward).enumerate() {
        w.write_record([i.to_string(), a.to_string(), r.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Frames per episode, as produced by [`super::evaluate::rollout`].
pub fn write_trajectory<W: Write>(out: W, episodes: &[(usize, Vec<Frame>)]) -> Result<(), Error> {
    let mut w = writer(out, &TRAJECTORY_HEADER)?;
    for (episode, frames) in episodes {
        for (step, frame) in frames.iter().enumerate() {
            for (i, p) in frame.iter().enumerate() {
                let entity = if i == 0 {
                    "agent".to_string()
                } else {
                    format!("obstacle{}", i - 1)
                };
                w.write_record([
                    episode.to_string(),
                    step.to_string(),
                    entity,
                    p.x.to_string(),
                    p.y.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory<R: Read>(input: R) -> Result<Vec<TrajectoryRow>, Error> {
    let mut reader = csv::Reader::from_reader(input);
    check_header(&mut reader, &TRAJECTORY_HEADER)?;
    reader
        .records()
        .map(|record| {
            let r = record?;
            Ok(TrajectoryRow {
                episode: field(&r, 0, "episode")?,
                step: field(&r, 1, "step")?,
                entity: field(&r, 2, "entity")?,
                x: field(&r, 3, "x")?,
                y: field(&r, 4, "y")?,
            })
        })
        .collect()
}

/// Agent path per episode, ordered by step.
pub fn agent_paths(rows: &[TrajectoryRow]) -> BTreeMap<usize, Vec<Vec2>> {
    let mut steps: BTreeMap<usize, BTreeMap<usize, Vec2>> = BTreeMap::new();
    for row in rows.iter().filter(|r| r.entity == "agent") {
        steps
            .entry(row.episode)
            .or_default()
            .insert(row.step, Vec2::new(row.x, row.y));
    }
    steps
        .into_iter()
        .map(|(episode, by_step)| (episode, by_step.into_values().collect()))
        .collect()
}

/// Streams per-step reward breakdowns.
pub struct RewardWriter<W: Write>(csv::Writer<W>);

impl<W: Write> RewardWriter<W> {
    pub fn new(out: W) -> Result<Self, Error> {
        Ok(Self(writer(out, &REWARDS_HEADER)?))
    }

    pub fn write(
        &mut self,
        episode: usize,
        step: usize,
        r: &StepRewardBreakdown,
    ) -> Result<(), Error> {
        self.0.write_record([
            episode.to_string(),
            step.to_string(),
            r.r1.to_string(),
            r.r2.to_string(),
            r.r3.to_string(),
            r.r4.to_string(),
            r.total.to_string(),
        ])?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), Error> {
        self.0.flush()?;
        Ok(())
    }
}

/// Streams the predicted paths behind each action; `k` counts steps ahead
/// starting at 1.
pub struct PredictionWriter<W: Write>(csv::Writer<W>);

impl<W: Write> PredictionWriter<W> {
    pub fn new(out: W) -> Result<Self, Error> {
        Ok(Self(writer(out, &PREDICTIONS_HEADER)?))
    }

    pub fn write(&mut self, episode: usize, step: usize, paths: &[Vec<Vec2>]) -> Result<(), Error> {
        for (obstacle, path) in paths.iter().enumerate() {
            for (k, p) in path.iter().enumerate() {
                self.0.write_record([
                    episode.to_string(),
                    step.to_string(),
                    obstacle.to_string(),
                    (k + 1).to_string(),
                    p.x.to_string(),
                    p.y.to_string(),
                ])?;
            }
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), Error> {
        self.0.flush()?;
        Ok(())
    }
}

/// Per-cell comparison rows. Path statistics of cells without a successful
/// episode are written as `NaN`.
pub fn write_compare<W: Write>(out: W, cells: &[CellResult]) -> Result<(), Error> {
    let mut w = writer(out, &COMPARE_HEADER)?;
    for c in cells {
        w.write_record([
            c.scene.clone(),
            c.algo.to_string(),
            c.seed.to_string(),
            c.eval.accuracy_rate.to_string(),
            c.eval.mean_path_length.to_string(),
            c.eval.mean_turning_angle.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
