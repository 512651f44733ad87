//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::ddpg::{
    load_agent, save_agent, train_with_observer, Algo, ExperimentConfig, StepRecord, TrainObserver,
};
use crate::world::{load_scene, SceneConfig};
use crate::Error;

use super::compare::{run_compare, CompareSpec, DEFAULT_EVAL_EPISODES};
use super::evaluate::{eval_seeds, evaluate, rollout};
use super::exec::Execution;
use super::io::{self, PredictionWriter, RewardWriter};
use super::metrics::{
    accuracy_rate, reward_curve, summarize, trailing_accuracy, EpisodeLog, DEFAULT_ACCURACY_WINDOW,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "mddpg",
    version,
    about = "Train and compare path-planning agents around moving obstacles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one agent and save it with its training metrics.
    Train(TrainArgs),
    /// Evaluate a saved agent greedily and write a metrics CSV.
    Eval(EvalArgs),
    /// Roll out a saved agent and export agent/obstacle trajectories.
    ReplayExport(EvalArgs),
    /// Train and evaluate every scene x algo x seed cell.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Bundled scene name (scene1, scene2, square) or scene file path.
    #[arg(long)]
    scene: String,
    #[arg(long, default_value = "mddpg")]
    algo: Algo,
    #[arg(long, default_value_t = 3000)]
    episodes: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory for the model, metrics.csv and curve.csv.
    #[arg(long)]
    out: PathBuf,
    /// Hyperparameter file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also write per-step reward terms to rewards.csv.
    #[arg(long)]
    log_rewards: bool,
    /// Also write predicted obstacle paths to predictions.csv.
    #[arg(long)]
    log_predictions: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    scene: String,
    /// Directory written by `train`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    episodes: Option<usize>,
    /// Evaluation seed; defaults to the training seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; CSV goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run episodes on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Scenes to compare; repeat the flag for several.
    #[arg(long, required = true)]
    scene: Vec<String>,
    /// Algorithms to compare; all three when omitted.
    #[arg(long)]
    algo: Vec<Algo>,
    #[arg(long, default_value_t = 3000)]
    episodes: usize,
    /// First seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of consecutive seeds starting at `--seed`.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    #[arg(long, default_value_t = DEFAULT_EVAL_EPISODES)]
    eval_episodes: usize,
    /// Output directory for compare.csv, compare.txt and per-cell metrics.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    sequential: bool,
}

/// Resolves a bundled scene name or reads a scene file.
pub fn resolve_scene(arg: &str) -> Result<SceneConfig, Error> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Some(scene) = SceneConfig::bundled(arg) {
            return Ok(scene);
        }
    }
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read scene `{arg}`: {e}")))?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or(arg);
    Ok(load_scene(&text, name)?)
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, Error> {
    match path {
        None => Ok(ExperimentConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read config `{}`: {e}", p.display())))?;
            Ok(ExperimentConfig::parse(&text)?)
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    Ok(BufWriter::new(File::create(path)?))
}

struct TrainLogs {
    rewards: Option<RewardWriter<BufWriter<File>>>,
    predictions: Option<PredictionWriter<BufWriter<File>>>,
    error: Option<Error>,
}

impl TrainObserver for TrainLogs {
    fn on_step(&mut self, record: &StepRecord<'_>) {
        if self.error.is_some() {
            return;
        }
        let mut result = Ok(());
        if let Some(w) = &mut self.rewards {
            result = w.write(record.episode, record.step, record.reward);
        }
        if let (Ok(()), Some(w), Some(paths)) = (&result, &mut self.predictions, record.predictions)
        {
            result = w.write(record.episode, record.step, paths);
        }
        if let Err(e) = result {
            self.error = Some(e);
        }
    }
}

fn cmd_train(args: TrainArgs, stdout: &mut dyn Write) -> Result<(), Error> {
    let scene = resolve_scene(&args.scene)?;
    let cfg = load_config(args.config.as_deref())?;
    fs::create_dir_all(&args.out)?;
    let mut logs = TrainLogs {
        rewards: match args.log_rewards {
            true => Some(RewardWriter::new(create(&args.out.join("rewards.csv"))?)?),
            false => None,
        },
        predictions: match args.log_predictions {
            true => Some(PredictionWriter::new(create(
                &args.out.join("predictions.csv"),
            )?)?),
            false => None,
        },
        error: None,
    };
    let outcome =
        train_with_observer(&scene, &cfg, args.episodes, args.seed, args.algo, &mut logs)?;
    if let Some(e) = logs.error {
        return Err(e);
    }
    if let Some(w) = logs.rewards {
        w.finish()?;
    }
    if let Some(w) = logs.predictions {
        w.finish()?;
    }
    save_agent(
        &args.out,
        &outcome.agent,
        &scene.name,
        args.seed,
        args.episodes,
        &cfg,
    )?;
    io::write_metrics(create(&args.out.join("metrics.csv"))?, &outcome.episodes)?;
    io::write_curve(
        create(&args.out.join("curve.csv"))?,
        &accuracy_rate(&outcome.episodes, DEFAULT_ACCURACY_WINDOW),
        &reward_curve(&outcome.episodes, DEFAULT_ACCURACY_WINDOW),
    )?;
    writeln!(
        stdout,
        "trained {} on {} for {} episodes (seed {}): trailing accuracy {:.3}",
        args.algo,
        scene.name,
        args.episodes,
        args.seed,
        trailing_accuracy(&outcome.episodes, DEFAULT_ACCURACY_WINDOW)
    )?;
    Ok(())
}

fn summary_line(logs: &[EpisodeLog]) -> String {
    let s = summarize(logs);
    format!(
        "{} episodes: accuracy {:.3}, mean path length {:.1}, mean turning angle {:.1} deg, mean reward {:.2}",
        s.episodes_counted, s.accuracy_rate, s.mean_path_length, s.mean_turning_angle, s.mean_reward
    )
}

fn cmd_eval(args: EvalArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Error> {
    let scene = resolve_scene(&args.scene)?;
    let (agent, manifest, cfg) = load_agent(&args.model)?;
    let seed = args.seed.unwrap_or(manifest.seed);
    let exec = if args.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let logs = evaluate(
        &agent,
        &scene,
        &cfg,
        args.episodes.unwrap_or(DEFAULT_EVAL_EPISODES),
        seed,
        exec,
    )?;
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            io::write_metrics(create(&dir.join("metrics.csv"))?, &logs)?;
            writeln!(stdout, "{}", summary_line(&logs))?;
        }
        None => {
            io::write_metrics(&mut *stdout, &logs)?;
            writeln!(stderr, "{}", summary_line(&logs))?;
        }
    }
    Ok(())
}

fn cmd_replay(args: EvalArgs, stdout: &mut dyn Write) -> Result<(), Error> {
    let scene = std::sync::Arc::new(resolve_scene(&args.scene)?);
    let (agent, manifest, cfg) = load_agent(&args.model)?;
    if agent.policy.state_dim() != scene.state_dim() {
        return Err(Error::Config(
            "model does not match the scene's observation size".into(),
        ));
    }
    let seeds = eval_seeds(
        args.seed.unwrap_or(manifest.seed),
        args.episodes.unwrap_or(1),
    );
    let mut episodes = Vec::with_capacity(seeds.len());
    for (episode, world_seed) in seeds.into_iter().enumerate() {
        let (_, frames) = rollout(&agent, &scene, &cfg, episode, world_seed)?;
        episodes.push((episode, frames));
    }
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            io::write_trajectory(create(&dir.join("trajectory.csv"))?, &episodes)?;
        }
        None => io::write_trajectory(&mut *stdout, &episodes)?,
    }
    Ok(())
}

fn cmd_compare(args: CompareArgs, stdout: &mut dyn Write) -> Result<(), Error> {
    let scenes = args
        .scene
        .iter()
        .map(|s| resolve_scene(s))
        .collect::<Result<Vec<_>, _>>()?;
    let spec = CompareSpec {
        scenes,
        algos: if args.algo.is_empty() {
            Algo::ALL.to_vec()
        } else {
            args.algo
        },
        seeds: (args.seed..args.seed + args.seeds).collect(),
        episodes: args.episodes,
        eval_episodes: args.eval_episodes,
        config: load_config(args.config.as_deref())?,
    };
    let exec = if args.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let report = run_compare(&spec, exec);
    let text = report.to_text();
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir.join("cells"))?;
            io::write_compare(create(&dir.join("compare.csv"))?, &report.cells)?;
            fs::write(dir.join("compare.txt"), &text)?;
            for c in &report.cells {
                let file = dir
                    .join("cells")
                    .join(format!("{}_{}_{}.csv", c.scene, c.algo, c.seed));
                io::write_metrics(create(&file)?, &c.eval_logs)?;
            }
        }
        None => io::write_compare(&mut *stdout, &report.cells)?,
    }
    write!(stdout, "{text}")?;
    Ok(())
}

/// Parses `argv` (program name first) and runs the command.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Train(a) => cmd_train(a, stdout),
        Command::Eval(a) => cmd_eval(a, stdout, stderr),
        Command::ReplayExport(a) => cmd_replay(a, stdout),
        Command::Compare(a) => cmd_compare(a, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_RUNTIME
        }
    }
}
