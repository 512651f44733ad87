//! Multi-scene, multi-algorithm, multi-seed comparison runs.

use std::fmt::Write as _;

use crate::ddpg::{train, Agent, Algo, ExperimentConfig};
use crate::world::SceneConfig;
use crate::Error;

use super::evaluate::evaluate;
use super::exec::Execution;
use super::metrics::{
    summarize, trailing_accuracy, EpisodeLog, MetricsSummary, DEFAULT_ACCURACY_WINDOW,
};

/// Greedy episodes per cell unless overridden.
pub const DEFAULT_EVAL_EPISODES: usize = 100;

#[derive(Debug, Clone)]
pub struct CompareSpec {
    pub scenes: Vec<SceneConfig>,
    pub algos: Vec<Algo>,
    pub seeds: Vec<u64>,
    pub episodes: usize,
    pub eval_episodes: usize,
    pub config: ExperimentConfig,
}

/// Outcome of one trained and evaluated (scene, algo, seed) cell.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub scene: String,
    pub algo: Algo,
    pub seed: u64,
    /// Last-quarter mean of the sliding training accuracy.
    pub train_accuracy: f64,
    pub eval: MetricsSummary,
    pub eval_logs: Vec<EpisodeLog>,
    pub agent: Agent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub scene: String,
    pub algo: Algo,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    /// Number of finite values aggregated.
    pub n: usize,
}

impl MeanStd {
    /// Sample statistics over the finite entries of `values`.
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
        let n = v.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
                n,
            };
        }
        let mean = v.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std, n }
    }
}

/// Per-(scene, algo) aggregate over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupRow {
    pub scene: String,
    pub algo: Algo,
    pub seeds: usize,
    pub train_accuracy: MeanStd,
    pub accuracy: MeanStd,
    pub path_length: MeanStd,
    pub turning_angle: MeanStd,
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub cells: Vec<CellResult>,
    pub failures: Vec<CellFailure>,
}

impl CompareReport {
    pub fn groups(&self) -> Vec<GroupRow> {
        let mut keys: Vec<(String, Algo)> = Vec::new();
        for c in &self.cells {
            if !keys.iter().any(|(s, a)| *s == c.scene && *a == c.algo) {
                keys.push((c.scene.clone(), c.algo));
            }
        }
        keys.into_iter()
            .map(|(scene, algo)| {
                let cells: Vec<&CellResult> = self
                    .cells
                    .iter()
                    .filter(|c| c.scene == scene && c.algo == algo)
                    .collect();
                GroupRow {
                    seeds: cells.len(),
                    train_accuracy: MeanStd::of(cells.iter().map(|c| c.train_accuracy)),
                    accuracy: MeanStd::of(cells.iter().map(|c| c.eval.accuracy_rate)),
                    path_length: MeanStd::of(cells.iter().map(|c| c.eval.mean_path_length)),
                    turning_angle: MeanStd::of(cells.iter().map(|c| c.eval.mean_turning_angle)),
                    scene,
                    algo,
                }
            })
            .collect()
    }

    pub fn group(&self, scene: &str, algo: Algo) -> Option<GroupRow> {
        self.groups()
            .into_iter()
            .find(|g| g.scene == scene && g.algo == algo)
    }

    /// Aligned text table of mean ± std per (scene, algo).
    pub fn to_text(&self) -> String {
        let cell =
            |m: &MeanStd, digits: usize| format!("{:.*} ± {:.*}", digits, m.mean, digits, m.std);
        let header = [
            "scene",
            "algo",
            "seeds",
            "train_acc",
            "accuracy",
            "path_length",
            "turning_angle",
        ];
        let mut rows: Vec<[String; 7]> = vec![header.map(String::from)];
        for g in self.groups() {
            rows.push([
                g.scene.clone(),
                g.algo.to_string(),
                g.seeds.to_string(),
                cell(&g.train_accuracy, 3),
                cell(&g.accuracy, 3),
                cell(&g.path_length, 1),
                cell(&g.turning_angle, 1),
            ]);
        }
        let widths: Vec<usize> = (0..7)
            .map(|i| rows.iter().map(|r| r[i].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &rows {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(text, w)| format!("{text:<w$}"))
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        for f in &self.failures {
            let _ = writeln!(
                out,
                "failed: {} {} seed {}: {}",
                f.scene, f.algo, f.seed, f.error
            );
        }
        out
    }
}

fn run_cell(
    scene: &SceneConfig,
    algo: Algo,
    seed: u64,
    spec: &CompareSpec,
    exec: Execution,
) -> Result<CellResult, Error> {
    let outcome = train(scene, &spec.config, spec.episodes, seed, algo)?;
    let eval_logs = evaluate(
        &outcome.agent,
        scene,
        &spec.config,
        spec.eval_episodes,
        seed,
        exec,
    )?;
    Ok(CellResult {
        scene: scene.name.clone(),
        algo,
        seed,
        train_accuracy: trailing_accuracy(&outcome.episodes, DEFAULT_ACCURACY_WINDOW),
        eval: summarize(&eval_logs),
        eval_logs,
        agent: outcome.agent,
    })
}

/// Trains and evaluates every (scene, algo, seed) cell. Cells run
/// independently under `exec`; a failing cell is recorded and skipped.
pub fn run_compare(spec: &CompareSpec, exec: Execution) -> CompareReport {
    let mut jobs = Vec::new();
    for scene in &spec.scenes {
        for &algo in &spec.algos {
            for &seed in &spec.seeds {
                jobs.push((scene, algo, seed));
            }
        }
    }
    let results = exec.map(&jobs, |&(scene, algo, seed)| {
        run_cell(scene, algo, seed, spec, exec)
    });
    let mut report = CompareReport {
        cells: Vec::new(),
        failures: Vec::new(),
    };
    for ((scene, algo, seed), result) in jobs.into_iter().zip(results) {
        match result {
            Ok(cell) => report.cells.push(cell),
            Err(e) => report.failures.push(CellFailure {
                scene: scene.name.clone(),
                algo,
                seed,
                error: e.to_string(),
            }),
        }
    }
    report
}
