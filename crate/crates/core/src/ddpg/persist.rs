//! Saving and loading trained agents.
//!
//! A model directory holds one checkpoint per network, the experiment
//! config as `config.txt`, and a manifest:
//!
//! ```text
//! algo mddpg
//! scene scene1
//! seed 7
//! episodes 3000
//! state_dim 24
//! network actor actor.mlpw
//! network critic critic.mlpw
//! ...
//! ```

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::kv::{self, ParseError};
use crate::neural::{read_checkpoint, write_checkpoint, MlpParams};
use crate::Error;

use super::config::ExperimentConfig;
use super::{Agent, AgentBundle, Algo, DqnBundle, Policy};

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const CONFIG_FILE: &str = "config.txt";

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub algo: Algo,
    pub scene: String,
    pub seed: u64,
    pub episodes: usize,
    pub state_dim: usize,
    /// `(role, file name)` pairs.
    pub networks: Vec<(String, String)>,
}

impl Manifest {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "algo {}", self.algo);
        let _ = writeln!(s, "scene {}", self.scene);
        let _ = writeln!(s, "seed {}", self.seed);
        let _ = writeln!(s, "episodes {}", self.episodes);
        let _ = writeln!(s, "state_dim {}", self.state_dim);
        for (role, file) in &self.networks {
            let _ = writeln!(s, "network {role} {file}");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let (mut algo, mut scene, mut seed, mut episodes, mut state_dim) =
            (None, None, None, None, None);
        let mut networks = Vec::new();
        for line in kv::lines(text) {
            match line.key {
                "algo" => algo = Some(line.single::<Algo>()?),
                "scene" => scene = Some(line.single::<String>()?),
                "seed" => seed = Some(line.single()?),
                "episodes" => episodes = Some(line.single()?),
                "state_dim" => state_dim = Some(line.single()?),
                "network" => {
                    line.expect_args(2)?;
                    networks.push((line.arg(0)?, line.arg(1)?));
                }
                other => return Err(line.error(format!("unknown manifest key `{other}`"))),
            }
        }
        let missing = |key: &str| ParseError::new(0, format!("manifest is missing `{key}`"));
        Ok(Self {
            algo: algo.ok_or_else(|| missing("algo"))?,
            scene: scene.ok_or_else(|| missing("scene"))?,
            seed: seed.ok_or_else(|| missing("seed"))?,
            episodes: episodes.ok_or_else(|| missing("episodes"))?,
            state_dim: state_dim.ok_or_else(|| missing("state_dim"))?,
            networks,
        })
    }

    fn file_for(&self, role: &str) -> Result<&str, Error> {
        self.networks
            .iter()
            .find(|(r, _)| r == role)
            .map(|(_, f)| f.as_str())
            .ok_or_else(|| Error::Config(format!("manifest names no `{role}` network")))
    }
}

fn networks(policy: &Policy) -> Vec<(&'static str, &MlpParams)> {
    match policy {
        Policy::ActorCritic(b) => vec![
            ("actor", &b.actor),
            ("critic", &b.critic),
            ("target_actor", &b.target_actor),
            ("target_critic", &b.target_critic),
        ],
        Policy::Q(b) => vec![("q", &b.q), ("q_target", &b.q_target)],
    }
}

/// Writes `agent` into `dir`, creating it if needed.
pub fn save_agent(
    dir: &Path,
    agent: &Agent,
    scene: &str,
    seed: u64,
    episodes: usize,
    cfg: &ExperimentConfig,
) -> Result<Manifest, Error> {
    fs::create_dir_all(dir)?;
    let mut entries = Vec::new();
    for (role, net) in networks(&agent.policy) {
        let file = format!("{role}.mlpw");
        write_checkpoint(net, BufWriter::new(File::create(dir.join(&file))?))?;
        entries.push((role.to_string(), file));
    }
    let manifest = Manifest {
        algo: agent.algo,
        scene: scene.to_string(),
        seed,
        episodes,
        state_dim: agent.policy.state_dim(),
        networks: entries,
    };
    fs::write(dir.join(MANIFEST_FILE), manifest.to_text())?;
    fs::write(dir.join(CONFIG_FILE), cfg.to_text())?;
    Ok(manifest)
}

/// Loads an agent saved by [`save_agent`]. Optimiser state is not
/// persisted; a loaded agent is meant for evaluation.
pub fn load_agent(dir: &Path) -> Result<(Agent, Manifest, ExperimentConfig), Error> {
    let manifest = Manifest::parse(&fs::read_to_string(dir.join(MANIFEST_FILE))?)?;
    let cfg = match fs::read_to_string(dir.join(CONFIG_FILE)) {
        Ok(text) => ExperimentConfig::parse(&text)?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => ExperimentConfig::default(),
        Err(e) => return Err(e.into()),
    };
    let load = |role: &str| -> Result<MlpParams, Error> {
        let file = File::open(dir.join(manifest.file_for(role)?))?;
        let net = read_checkpoint(BufReader::new(file))?;
        if net.input_dim() < manifest.state_dim {
            return Err(Error::Config(format!(
                "`{role}` network does not match state_dim"
            )));
        }
        Ok(net)
    };
    let policy = match manifest.algo {
        Algo::Mddpg | Algo::Ddpg => {
            let mut bundle = AgentBundle::from_networks(
                load("actor")?,
                load("critic")?,
                &cfg.agent,
                manifest.seed,
            );
            bundle.target_actor = load("target_actor")?;
            bundle.target_critic = load("target_critic")?;
            if bundle.actor.input_dim() != manifest.state_dim || bundle.actor.output_dim() != 2 {
                return Err(Error::Config("actor shape does not match manifest".into()));
            }
            Policy::ActorCritic(bundle)
        }
        Algo::Dqn => {
            let mut bundle = DqnBundle::from_network(load("q")?, &cfg.agent, manifest.seed);
            bundle.q_target = load("q_target")?;
            if bundle.q.input_dim() != manifest.state_dim {
                return Err(Error::Config(
                    "q network shape does not match manifest".into(),
                ));
            }
            Policy::Q(bundle)
        }
    };
    Ok((
        Agent {
            algo: manifest.algo,
            policy,
        },
        manifest,
        cfg,
    ))
}
