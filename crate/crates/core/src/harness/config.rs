use std::path::{Path, PathBuf};

use crate::domains::{domain_by_name, parse_sizes, Domain, DomainConfig};
use crate::qlearn::{LearnParams, QKind};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("bad value for `{key}`: {message}")]
    Value { key: String, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Everything needed to run one algorithm on one domain over several seeds.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub algorithm: QKind,
    pub domain: String,
    pub domain_config: DomainConfig,
    pub runs: usize,
    pub seed_base: u64,
    pub learn: LearnParams,
    pub test_trajectories: usize,
    pub goal_slack: usize,
    /// Trajectory file mixed into early GBQL/RRT training sets.
    pub expert_trajectories: Option<PathBuf>,
    /// Write real wall-clock times instead of zeros.
    pub record_timing: bool,
    /// Save a resumable checkpoint after every iteration.
    pub checkpoint: bool,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            algorithm: QKind::Gbql,
            domain: "stack".into(),
            domain_config: DomainConfig::default(),
            runs: 10,
            seed_base: 0,
            learn: LearnParams::default(),
            test_trajectories: 10,
            goal_slack: 2,
            expert_trajectories: None,
            record_timing: false,
            checkpoint: false,
            output: PathBuf::from("results"),
        }
    }
}

pub const CONFIG_KEYS: &[&str] = &[
    "algorithm",
    "domain",
    "runs",
    "seed_base",
    "iterations",
    "boosting_stages",
    "trajectories",
    "alpha",
    "gamma",
    "epsilon",
    "epsilon_decay",
    "epsilon_min",
    "replay_fraction",
    "replay_capacity",
    "replay_all",
    "max_episode_steps",
    "test_trajectories",
    "goal_slack",
    "max_depth",
    "min_leaf",
    "max_literals",
    "min_variance_reduction",
    "rbfq_max_depth",
    "train_counts",
    "test_counts",
    "on_base_penalty",
    "on_offtower_penalty",
    "action_failure",
    "expert_trajectories",
    "expert_iterations",
    "record_timing",
    "checkpoint",
    "output",
];

fn value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e: T::Err| ConfigError::Value {
        key: key.to_string(),
        message: format!("`{v}`: {e}"),
    })
}

impl RunConfig {
    /// Parses `key = value` lines. Relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut seen: Vec<&str> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            let (key, v) = (key.trim(), v.trim());
            let Some(&known) = CONFIG_KEYS.iter().find(|k| **k == key) else {
                return Err(ConfigError::UnknownKey {
                    line: i + 1,
                    key: key.to_string(),
                });
            };
            if seen.contains(&known) {
                return Err(ConfigError::Duplicate {
                    line: i + 1,
                    key: key.to_string(),
                });
            }
            seen.push(known);
            cfg.set(key, v, base)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        RunConfig::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn set(&mut self, key: &str, v: &str, base: &Path) -> Result<(), ConfigError> {
        let l = &mut self.learn;
        match key {
            "algorithm" => {
                self.algorithm = QKind::parse(v).ok_or_else(|| ConfigError::Value {
                    key: key.into(),
                    message: format!("`{v}` is not one of gbql, rbfq, rrt"),
                })?
            }
            "domain" => self.domain = v.to_string(),
            "runs" => self.runs = value(key, v)?,
            "seed_base" => self.seed_base = value(key, v)?,
            "iterations" => l.iterations = value(key, v)?,
            "boosting_stages" => l.stages = value(key, v)?,
            "trajectories" => l.trajectories = value(key, v)?,
            "alpha" => l.alpha = value(key, v)?,
            "gamma" => l.gamma = value(key, v)?,
            "epsilon" => l.epsilon = value(key, v)?,
            "epsilon_decay" => l.epsilon_decay = value(key, v)?,
            "epsilon_min" => l.epsilon_min = value(key, v)?,
            "replay_fraction" => l.replay_fraction = value(key, v)?,
            "replay_capacity" => l.replay_capacity = value(key, v)?,
            "replay_all" => l.replay_all = value(key, v)?,
            "max_episode_steps" => l.max_episode_steps = value(key, v)?,
            "max_depth" => l.tree.max_depth = value(key, v)?,
            "min_leaf" => l.tree.min_leaf = value(key, v)?,
            "max_literals" => l.tree.max_literals = value(key, v)?,
            "min_variance_reduction" => l.tree.min_variance_reduction = value(key, v)?,
            "rbfq_max_depth" => l.rbfq_max_depth = value(key, v)?,
            "expert_iterations" => l.expert_iterations = value(key, v)?,
            "test_trajectories" => self.test_trajectories = value(key, v)?,
            "goal_slack" => self.goal_slack = value(key, v)?,
            "train_counts" | "test_counts" => {
                let sizes = parse_sizes(v).map_err(|e| ConfigError::Value {
                    key: key.into(),
                    message: e.to_string(),
                })?;
                if key == "train_counts" {
                    self.domain_config.train = Some(sizes);
                } else {
                    self.domain_config.test = Some(sizes);
                }
            }
            "on_base_penalty" => self.domain_config.on_base_penalty = value(key, v)?,
            "on_offtower_penalty" => self.domain_config.on_offtower_penalty = value(key, v)?,
            "action_failure" => self.domain_config.action_failure = value(key, v)?,
            "expert_trajectories" => self.expert_trajectories = Some(base.join(v)),
            "record_timing" => self.record_timing = value(key, v)?,
            "checkpoint" => self.checkpoint = value(key, v)?,
            "output" => self.output = base.join(v),
            _ => unreachable!("key list and setter disagree on `{key}`"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.runs < 1 {
            return Err(ConfigError::Invalid("runs must be at least 1".into()));
        }
        let dc = &self.domain_config;
        if !(0.0..=1.0).contains(&dc.action_failure) {
            return Err(ConfigError::Invalid("action_failure must lie in [0, 1]".into()));
        }
        if !(dc.on_offtower_penalty > dc.on_base_penalty && dc.on_base_penalty > 0.0) {
            return Err(ConfigError::Invalid(
                "on penalties must satisfy on_offtower_penalty > on_base_penalty > 0".into(),
            ));
        }
        self.learn.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.build_domain()?;
        Ok(())
    }

    pub fn build_domain(&self) -> Result<Box<dyn Domain>, ConfigError> {
        domain_by_name(&self.domain, &self.domain_config).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Learning parameters for run `k`, counted from 0.
    pub fn params_for_run(&self, k: usize) -> LearnParams {
        LearnParams {
            seed: self.seed_base + k as u64,
            ..self.learn.clone()
        }
    }

    pub fn file_stem(&self) -> String {
        format!("{}_{}", self.algorithm.as_str(), self.domain)
    }
}
