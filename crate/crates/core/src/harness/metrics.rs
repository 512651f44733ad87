//! Per-episode logs and the path/accuracy metrics computed from them.

use thiserror::Error;

use crate::geometry::Vec2;
use crate::world::Status;

/// Sliding-window width for accuracy curves.
pub const DEFAULT_ACCURACY_WINDOW: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("path has no points")]
    EmptyPath,
}

/// One finished episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub episode: usize,
    /// Always terminal.
    pub outcome: Status,
    pub reward: f64,
    pub steps: usize,
    /// Agent positions including the start; `steps + 1` points.
    pub path: Vec<Vec2>,
    /// Mean horizon-endpoint prediction error, when predictions were made
    /// and at least one came due.
    pub prediction_error: Option<f64>,
}

impl EpisodeLog {
    pub fn reached(&self) -> bool {
        self.outcome == Status::ReachedGoal
    }

    pub fn path_length(&self) -> f64 {
        path_length(&self.path).unwrap_or(0.0)
    }

    pub fn turning_angle(&self) -> f64 {
        turning_angle(&self.path)
    }
}

/// Sum of consecutive segment lengths.
pub fn path_length(path: &[Vec2]) -> Result<f64, MetricsError> {
    if path.is_empty() {
        return Err(MetricsError::EmptyPath);
    }
    Ok(path.windows(2).map(|w| w[0].distance(w[1])).sum())
}

/// Total absolute heading change in degrees. Zero-length segments carry no
/// heading and are skipped.
pub fn turning_angle(path: &[Vec2]) -> f64 {
    let mut total = 0.0;
    let mut previous: Option<Vec2> = None;
    for w in path.windows(2) {
        let d = w[1] - w[0];
        if d.x == 0.0 && d.y == 0.0 {
            continue;
        }
        if let Some(p) = previous {
            total += p.cross(d).atan2(p.dot(d)).abs();
        }
        previous = Some(d);
    }
    total.to_degrees()
}

/// Fraction of goal outcomes over the trailing `window` episodes, one value
/// per episode. Early entries average over the episodes seen so far.
pub fn accuracy_rate(logs: &[EpisodeLog], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut hits = 0usize;
    let mut series = Vec::with_capacity(logs.len());
    for (i, log) in logs.iter().enumerate() {
        hits += usize::from(log.reached());
        if i >= window {
            hits -= usize::from(logs[i - window].reached());
        }
        series.push(hits as f64 / (i + 1).min(window) as f64);
    }
    series
}

/// Trailing-window mean reward, aligned with [`accuracy_rate`].
pub fn reward_curve(logs: &[EpisodeLog], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut sum = 0.0;
    let mut series = Vec::with_capacity(logs.len());
    for (i, log) in logs.iter().enumerate() {
        sum += log.reward;
        if i >= window {
            sum -= logs[i - window].reward;
        }
        series.push(sum / (i + 1).min(window) as f64);
    }
    series
}

/// Mean of the accuracy curve over the last quarter of training (at least
/// one episode). Zero for an empty log.
pub fn trailing_accuracy(logs: &[EpisodeLog], window: usize) -> f64 {
    let series = accuracy_rate(logs, window);
    if series.is_empty() {
        return 0.0;
    }
    let tail = series.len().div_ceil(4);
    series[series.len() - tail..].iter().sum::<f64>() / tail as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsSummary {
    pub accuracy_rate: f64,
    /// Over goal-reaching episodes only; NaN when there are none.
    pub mean_path_length: f64,
    /// Over goal-reaching episodes only; NaN when there are none.
    pub mean_turning_angle: f64,
    pub mean_reward: f64,
    pub episodes_counted: usize,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

pub fn summarize(logs: &[EpisodeLog]) -> MetricsSummary {
    let reached = || logs.iter().filter(|l| l.reached());
    let hits = reached().count();
    MetricsSummary {
        accuracy_rate: if logs.is_empty() {
            0.0
        } else {
            hits as f64 / logs.len() as f64
        },
        mean_path_length: mean(reached().map(EpisodeLog::path_length)),
        mean_turning_angle: mean(reached().map(EpisodeLog::turning_angle)),
        mean_reward: if logs.is_empty() {
            0.0
        } else {
            mean(logs.iter().map(|l| l.reward))
        },
        episodes_counted: logs.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    fn log(outcome: Status) -> EpisodeLog {
        EpisodeLog {
            episode: 0,
            outcome,
            reward: 1.0,
            steps: 1,
            path: vec![p(0.0, 0.0), p(3.0, 4.0)],
            prediction_error: None,
        }
    }

    #[test]
    fn path_length_examples() {
        assert_eq!(path_length(&[p(0.0, 0.0)]).unwrap(), 0.0);
        assert_eq!(path_length(&[p(0.0, 0.0), p(3.0, 4.0)]).unwrap(), 5.0);
        assert_eq!(
            path_length(&[p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0)]).unwrap(),
            2.0
        );
        assert_eq!(path_length(&[]), Err(MetricsError::EmptyPath));
    }

    #[test]
    fn turning_angle_examples() {
        assert_eq!(turning_angle(&[p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0)]), 0.0);
        assert!((turning_angle(&[p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0)]) - 90.0).abs() < 1e-12);
        let zigzag = [p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(2.0, 1.0)];
        assert!((turning_angle(&zigzag) - 180.0).abs() < 1e-12);
        let with_pause = [p(0.0, 0.0), p(1.0, 0.0), p(1.0, 0.0), p(1.0, 1.0)];
        assert!((turning_angle(&with_pause) - 90.0).abs() < 1e-12);
        assert_eq!(turning_angle(&[p(0.0, 0.0)]), 0.0);
    }

    #[test]
    fn accuracy_examples() {
        use Status::*;
        let logs: Vec<_> = [ReachedGoal, Collided, ReachedGoal, ReachedGoal]
            .into_iter()
            .map(log)
            .collect();
        assert_eq!(*accuracy_rate(&logs, 4).last().unwrap(), 0.75);
        assert_eq!(accuracy_rate(&logs, 2), vec![1.0, 0.5, 0.5, 1.0]);
        let crashed: Vec<_> = (0..5).map(|_| log(Collided)).collect();
        assert!(accuracy_rate(&crashed, 3).iter().all(|a| *a == 0.0));
        let perfect: Vec<_> = (0..5).map(|_| log(ReachedGoal)).collect();
        assert!(accuracy_rate(&perfect, 3).iter().all(|a| *a == 1.0));
        assert_eq!(trailing_accuracy(&perfect, 100), 1.0);
        assert_eq!(trailing_accuracy(&[], 100), 0.0);
    }

    #[test]
    fn summary_uses_successful_paths_only() {
        let mut failed = log(Status::TimedOut);
        failed.path = vec![p(0.0, 0.0), p(100.0, 0.0)];
        let s = summarize(&[log(Status::ReachedGoal), failed]);
        assert_eq!(s.accuracy_rate, 0.5);
        assert_eq!(s.mean_path_length, 5.0);
        assert_eq!(s.episodes_counted, 2);
        assert!(summarize(&[log(Status::Collided)])
            .mean_path_length
            .is_nan());
    }
}
