//! Declarative experiment configuration.
//!
//! One TOML document describes an experiment: the environment, the agent
//! list with component weights, learner hyperparameters, the summary
//! specification, and the output directory. `RDX_OUT` overrides the output
//! root; a master-seed flag overrides `master_seed`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;

use rdx_core::env::highway::{HighwayConfig, HighwayEnv};
use rdx_core::env::pacman::{Maze, PacmanConfig, PacmanEnv};
use rdx_core::env::Environment;
use rdx_core::explain::{BarMode, BoardView};
use rdx_core::rng::derive_seed;
use rdx_core::summarizer::{ImportanceMetric, SelectionMethod, SummarySpec};
use rdx_core::types::{HyperParams, RewardVector};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub out_dir: PathBuf,
    pub master_seed: u64,
    pub environment: EnvironmentSection,
    pub learner: LearnerSection,
    pub record: RecordSection,
    pub summary: SummarySection,
    #[serde(default)]
    pub sanity: Option<SanitySection>,
    pub agents: Vec<AgentSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSection {
    pub kind: EnvKind,
    #[serde(default)]
    pub highway: Option<HighwaySection>,
    #[serde(default)]
    pub pacman: Option<PacmanSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    Highway,
    Pacman,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HighwaySection {
    pub num_lanes: usize,
    pub num_vehicles: usize,
    pub road_length: usize,
    pub episode_length: usize,
    pub speed_levels: usize,
    pub crash_penalty_total: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacmanSection {
    /// Inline maze text; exactly one of `maze` / `maze_file` must be set.
    #[serde(default)]
    pub maze: Option<String>,
    #[serde(default)]
    pub maze_file: Option<PathBuf>,
    pub num_ghosts: usize,
    pub frightened_duration: usize,
    pub episode_length: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerSection {
    pub gamma: f64,
    pub alpha: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_episodes: usize,
    pub tau: usize,
    pub episodes: usize,
    #[serde(default)]
    pub head_local_bootstrap: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordSection {
    pub episodes: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummarySection {
    pub k: usize,
    pub context_window: usize,
    pub interval: usize,
    pub metric: ImportanceMetric,
    pub selection: SelectionMethod,
    #[serde(default)]
    pub div_threshold: Option<f64>,
    pub fs_replicates: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SanitySection {
    pub weights: Vec<f64>,
    pub eval_episodes: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSection {
    pub id: String,
    /// Component weights keyed by component name (e.g. CL/SU/RML).
    pub weights: BTreeMap<String, f64>,
}

/// A parsed, validated experiment with resolved output root.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub out_dir: PathBuf,
    pub master_seed: u64,
    base_dir: PathBuf,
}

impl Experiment {
    /// Loads and validates a config file. `seed_override` replaces
    /// `master_seed`; the `RDX_OUT` environment variable replaces `out_dir`.
    pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::from_toml(&text, &base_dir, seed_override)
    }

    pub fn from_toml(text: &str, base_dir: &Path, seed_override: Option<u64>) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| anyhow!("invalid config: {e}"))?;
        let master_seed = seed_override.unwrap_or(config.master_seed);
        let out_dir = match std::env::var_os("RDX_OUT") {
            Some(root) => PathBuf::from(root),
            None => config.out_dir.clone(),
        };
        let experiment = Self {
            config,
            out_dir,
            master_seed,
            base_dir: base_dir.to_path_buf(),
        };
        experiment.validate()?;
        Ok(experiment)
    }

    /// Rebases the output directory (used by `demo` to fan out per env).
    pub fn with_out_dir(mut self, out_dir: PathBuf) -> Self {
        self.out_dir = out_dir;
        self
    }

    fn component_names(&self) -> Vec<&'static str> {
        match self.config.environment.kind {
            EnvKind::Highway => rdx_core::env::highway::COMPONENT_NAMES.to_vec(),
            EnvKind::Pacman => rdx_core::env::pacman::COMPONENT_NAMES.to_vec(),
        }
    }

    fn validate(&self) -> Result<()> {
        let cfg = &self.config;
        match cfg.environment.kind {
            EnvKind::Highway if cfg.environment.highway.is_none() => {
                bail!("environment.kind is highway but [environment.highway] is missing")
            }
            EnvKind::Pacman if cfg.environment.pacman.is_none() => {
                bail!("environment.kind is pacman but [environment.pacman] is missing")
            }
            _ => {}
        }
        if let Some(p) = &cfg.environment.pacman {
            match (&p.maze, &p.maze_file) {
                (None, None) => bail!("pacman config needs `maze` or `maze_file`"),
                (Some(_), Some(_)) => bail!("pacman config sets both `maze` and `maze_file`"),
                _ => {}
            }
        }
        if cfg.agents.is_empty() {
            bail!("config declares no agents");
        }
        let names = self.component_names();
        for agent in &cfg.agents {
            let keys: Vec<&str> = agent.weights.keys().map(String::as_str).collect();
            let mut expected: Vec<&str> = names.clone();
            expected.sort_unstable();
            if keys != expected {
                bail!(
                    "agent {:?}: weights must have exactly the keys {:?}, found {:?}",
                    agent.id,
                    names,
                    keys
                );
            }
        }
        let mut ids: Vec<&str> = cfg.agents.iter().map(|a| a.id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != cfg.agents.len() {
            bail!("agent ids must be unique");
        }
        if cfg.summary.selection == SelectionMethod::Frequency {
            bail!("summary.selection must be highlights or highlights_div; frequency summaries are produced as replicates alongside");
        }
        if let Some(s) = &cfg.sanity {
            if s.weights.len() != names.len() {
                bail!("sanity.weights must have {} entries", names.len());
            }
        }
        self.summary_spec(0)?.validate().map_err(|e| anyhow!(e))?;
        // Environment-level validation with the first agent's weights.
        self.build_env(&cfg.agents[0])?;
        self.hyper_params(0).validate().map_err(|e| anyhow!(e))?;
        Ok(())
    }

    /// Weights of an agent in component-index order.
    pub fn weights(&self, agent: &AgentSection) -> RewardVector {
        let names = self.component_names();
        RewardVector::from_vec(names.iter().map(|n| agent.weights[*n]).collect())
    }

    pub fn hyper_params(&self, agent_index: usize) -> HyperParams {
        let l = &self.config.learner;
        HyperParams {
            gamma: l.gamma,
            alpha: l.alpha,
            epsilon_start: l.epsilon_start,
            epsilon_end: l.epsilon_end,
            epsilon_decay_episodes: l.epsilon_decay_episodes,
            tau: l.tau,
            episodes: l.episodes,
            seed: derive_seed(self.master_seed, "agent.train", agent_index as u64),
            head_local_bootstrap: l.head_local_bootstrap,
        }
    }

    pub fn record_seed(&self, agent_index: usize) -> u64 {
        derive_seed(self.master_seed, "agent.record", agent_index as u64)
    }

    pub fn fs_seed(&self, agent_id: &str, replicate: usize) -> u64 {
        derive_seed(
            self.master_seed,
            &format!("sample.{agent_id}"),
            replicate as u64,
        )
    }

    fn pacman_config(&self, weights: RewardVector) -> Result<PacmanConfig> {
        let section = self.config.environment.pacman.as_ref().expect("validated");
        let maze_text = match (&section.maze, &section.maze_file) {
            (Some(text), None) => text.clone(),
            (None, Some(file)) => {
                let path = if file.is_absolute() {
                    file.clone()
                } else {
                    self.base_dir.join(file)
                };
                fs::read_to_string(&path)
                    .with_context(|| format!("cannot read maze file {}", path.display()))?
            }
            _ => unreachable!("validated"),
        };
        Ok(PacmanConfig {
            maze: Maze::parse(&maze_text)?,
            num_ghosts: section.num_ghosts,
            frightened_duration: section.frightened_duration,
            episode_length: section.episode_length,
            weights,
            seed: self.master_seed,
        })
    }

    fn highway_config(&self, weights: RewardVector) -> HighwayConfig {
        let section = self.config.environment.highway.as_ref().expect("validated");
        HighwayConfig {
            num_lanes: section.num_lanes,
            num_vehicles: section.num_vehicles,
            road_length: section.road_length,
            episode_length: section.episode_length,
            speed_levels: section.speed_levels,
            weights,
            crash_penalty_total: section.crash_penalty_total,
            seed: self.master_seed,
        }
    }

    /// Builds the configured environment with an agent's weights.
    pub fn build_env(&self, agent: &AgentSection) -> Result<Box<dyn Environment>> {
        let weights = self.weights(agent);
        match self.config.environment.kind {
            EnvKind::Highway => Ok(Box::new(HighwayEnv::new(self.highway_config(weights))?)),
            EnvKind::Pacman => Ok(Box::new(PacmanEnv::new(self.pacman_config(weights)?)?)),
        }
    }

    /// Highway environment for the sanity check, with the sanity weights.
    pub fn build_sanity_env(&self) -> Result<(HighwayConfig, f64, usize)> {
        let section = self
            .config
            .sanity
            .as_ref()
            .ok_or_else(|| anyhow!("config has no [sanity] section"))?;
        if self.config.environment.kind != EnvKind::Highway {
            bail!("sanity-check runs on the highway environment");
        }
        let weights = RewardVector::from_vec(section.weights.clone());
        let normalization: f64 = weights.values().iter().filter(|w| **w > 0.0).sum();
        Ok((
            self.highway_config(weights),
            normalization,
            section.eval_episodes,
        ))
    }

    pub fn board_view(&self) -> Result<BoardView> {
        match self.config.environment.kind {
            EnvKind::Highway => {
                let s = self.config.environment.highway.as_ref().expect("validated");
                Ok(BoardView::Highway {
                    num_lanes: s.num_lanes,
                    speed_levels: s.speed_levels,
                })
            }
            EnvKind::Pacman => {
                let weights = RewardVector::zeros(4);
                let cfg = self.pacman_config(weights)?;
                Ok(BoardView::Pacman {
                    maze: cfg.maze,
                    num_ghosts: cfg.num_ghosts,
                })
            }
        }
    }

    pub fn bar_mode(&self) -> BarMode {
        match self.config.environment.kind {
            EnvKind::Highway => BarMode::AllActions,
            EnvKind::Pacman => BarMode::ChosenActionOnly,
        }
    }

    /// Summary spec for the configured selection method.
    pub fn summary_spec(&self, seed: u64) -> Result<SummarySpec> {
        let s = &self.config.summary;
        Ok(SummarySpec {
            k: s.k,
            context_window: s.context_window,
            interval: s.interval,
            metric: s.metric,
            div_threshold: s.div_threshold,
            selection: s.selection,
            seed,
        })
    }

    /// Spec for one frequency-sampling replicate.
    pub fn frequency_spec(&self, agent_id: &str, replicate: usize) -> SummarySpec {
        let s = &self.config.summary;
        SummarySpec {
            k: s.k,
            context_window: s.context_window,
            interval: s.interval,
            metric: s.metric,
            div_threshold: None,
            selection: SelectionMethod::Frequency,
            seed: self.fs_seed(agent_id, replicate),
        }
    }

    pub fn agent_dir(&self, agent_id: &str) -> PathBuf {
        self.out_dir.join("agents").join(agent_id)
    }
}
