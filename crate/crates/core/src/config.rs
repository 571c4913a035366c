//! Run configuration: TOML with `generation`, `validation`, `heuristics`,
//! `rewards` and `output` sections. Missing keys take their defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::heuristics::HeuristicConfig;
use crate::learner::{LearnerConfig, PolicyParams};
use crate::oracle::{OracleConfig, MAX_TYPES};
use crate::reward::RewardConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file `{path}` not found")]
    MissingFile { path: PathBuf },
    #[error("cannot read config file `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown configuration key `{key}`")]
    UnknownKey { key: String },
    #[error("invalid value for `{key}`: {message}")]
    InvalidValue { key: String, message: String },
    #[error("malformed config: {message}")]
    Syntax { message: String },
    #[error("no preset named `{0}` (expected one of: {presets})", presets = PRESETS.map(|p| p.0).join(", "))]
    UnknownPreset(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub simulations: usize,
    pub episodes: usize,
    /// Simulation `i` is seeded with `seed + i`.
    pub seed: u64,
    /// Message types in the action universe.
    pub max_types: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub ucb_c: f64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        let p = PolicyParams::default();
        Self {
            simulations: 5,
            episodes: 12_000,
            seed: 0,
            max_types: 2,
            alpha: p.alpha,
            gamma: p.gamma,
            ucb_c: p.ucb_c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Text,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Episodes between checkpoints.
    pub checkpoint_every: usize,
    pub formats: Vec<ReportFormat>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("rbsynth-out"),
            checkpoint_every: 500,
            formats: vec![ReportFormat::Json, ReportFormat::Text],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub generation: GenerationConfig,
    pub validation: OracleConfig,
    pub heuristics: HeuristicConfig,
    pub rewards: RewardConfig,
    pub output: OutputConfig,
}

/// Shipped configurations, by name.
pub const PRESETS: [(&str, &str); 4] = [
    ("no_failure", include_str!("../presets/no_failure.cfg")),
    ("crash", include_str!("../presets/crash.cfg")),
    ("byzantine", include_str!("../presets/byzantine.cfg")),
    ("modified_crash", include_str!("../presets/modified_crash.cfg")),
];

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| {
            if source.kind() == std::io::ErrorKind::NotFound {
                ConfigError::MissingFile {
                    path: path.to_path_buf(),
                }
            } else {
                ConfigError::Io {
                    path: path.to_path_buf(),
                    source,
                }
            }
        })?;
        Self::parse(&text)
    }

    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        let (_, text) = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))?;
        Self::parse(text)
    }

    pub fn preset_text(name: &str) -> Option<&'static str> {
        PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::new(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(classify)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let g = &self.generation;
        let invalid = |key: &str, message: &str| {
            Err(ConfigError::InvalidValue {
                key: key.into(),
                message: message.into(),
            })
        };
        if g.simulations < 1 {
            return invalid("generation.simulations", "must be at least 1");
        }
        if g.episodes < 1 {
            return invalid("generation.episodes", "must be at least 1");
        }
        if !(1..=MAX_TYPES).contains(&g.max_types) {
            return invalid("generation.max_types", &format!("must be in 1..={MAX_TYPES}"));
        }
        if !(g.alpha > 0.0 && g.alpha <= 1.0) {
            return invalid("generation.alpha", "must be in (0, 1]");
        }
        if !(0.0..=1.0).contains(&g.gamma) {
            return invalid("generation.gamma", "must be in [0, 1]");
        }
        if !(g.ucb_c >= 0.0 && g.ucb_c.is_finite()) {
            return invalid("generation.ucb_c", "must be a finite non-negative number");
        }
        if self.heuristics.broadcast_send_type as usize >= g.max_types {
            return invalid("heuristics.broadcast_send_type", "must be below generation.max_types");
        }
        if let Err((field, message)) = self.heuristics.validate() {
            return invalid(&format!("heuristics.{field}"), &message);
        }
        self.validation.validate().map_err(|e| match e {
            crate::oracle::OracleError::InvalidConfig { key, message } => ConfigError::InvalidValue { key, message },
            other => ConfigError::InvalidValue {
                key: "validation".into(),
                message: other.to_string(),
            },
        })?;
        if self.output.checkpoint_every < 1 {
            return invalid("output.checkpoint_every", "must be at least 1");
        }
        Ok(())
    }

    pub fn learner(&self) -> LearnerConfig {
        LearnerConfig {
            policy: PolicyParams {
                ucb_c: self.generation.ucb_c,
                alpha: self.generation.alpha,
                gamma: self.generation.gamma,
            },
            heuristics: self.heuristics.clone(),
            rewards: self.rewards.clone(),
            oracle: self.validation.clone(),
            max_types: self.generation.max_types,
        }
    }
}

fn classify(err: serde_path_to_error::Error<toml::de::Error>) -> ConfigError {
    let path = err.path().to_string();
    let inner = err.into_inner();
    let message = inner.message().to_string();
    if let Some(rest) = message.strip_prefix("unknown field `") {
        let field = rest.split('`').next().unwrap_or_default();
        // the path already ends with the offending field when it is known
        let key = if path == "." || path.is_empty() {
            field.to_string()
        } else if path == field || path.ends_with(&format!(".{field}")) {
            path
        } else {
            format!("{path}.{field}")
        };
        return ConfigError::UnknownKey { key };
    }
    if path == "." || path.is_empty() {
        ConfigError::Syntax {
            message: inner.to_string(),
        }
    } else {
        ConfigError::InvalidValue { key: path, message }
    }
}
