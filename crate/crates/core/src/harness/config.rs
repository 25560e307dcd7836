//! Experiment configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::detect::RmaxParams;
use crate::error::{Error, Result};
use crate::games::GameId;
use crate::opponents::OpponentSpec;
use crate::tomop::{AgentKind, ToMoPParams};

/// Environment variable that replaces the configured output directory.
pub const OUTPUT_ENV: &str = "BAYES_TOMOP_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectionParams {
    /// Off by default: the stock scenarios only use library strategies.
    pub enabled: bool,
    pub h: usize,
    /// Episodes per new (strategy, policy) pair when models are regenerated.
    pub regen_episodes: usize,
    /// Opening episodes that detection ignores. Defaults to the υ window
    /// length, during which a first-order agent still assumes a ToMoP₀
    /// opponent.
    pub warmup: Option<usize>,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self {
            enabled: false,
            h: 10,
            regen_episodes: 100,
            warmup: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Name of the run directory; defaults to the config file stem.
    #[serde(default)]
    pub name: Option<String>,
    pub game: GameId,
    pub agent: AgentKind,
    #[serde(default = "default_episodes")]
    pub episodes: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    /// Output root; run files go to `<output>/<name>/`.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Policy store; defaults to `<output>/store/<game>.json`.
    #[serde(default)]
    pub store: Option<PathBuf>,
    pub opponent: OpponentSpec,
    #[serde(default)]
    pub tomop: ToMoPParams,
    #[serde(default)]
    pub detection: DetectionParams,
    #[serde(default)]
    pub learning: RmaxParams,
}

fn default_episodes() -> usize {
    1000
}

fn default_runs() -> usize {
    1
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if cfg.name.is_none() {
            cfg.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 || self.episodes == 0 {
            return Err(Error::Config("runs and episodes must be at least 1".into()));
        }
        if self.detection.h == 0 {
            return Err(Error::Config("detection.h must be at least 1".into()));
        }
        if self.detection.enabled && self.detection.regen_episodes < 2 {
            return Err(Error::Config("detection.regen_episodes must be at least 2".into()));
        }
        self.tomop.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.learning.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn name(&self) -> String {
        self.name.clone().unwrap_or_else(|| format!("{}-{}-{}", self.game, self.agent.as_str(), self.opponent.label()))
    }

    /// Output root: the environment override, else the config, else `out`.
    pub fn output_root(&self) -> PathBuf {
        output_root(self.output.as_deref())
    }

    pub fn run_dir(&self) -> PathBuf {
        self.output_root().join(self.name())
    }

    pub fn store_path(&self) -> PathBuf {
        self.store
            .clone()
            .unwrap_or_else(|| default_store_path(&self.output_root(), self.game))
    }

    /// Sets one sweepable parameter from its text form.
    pub fn set_param(&mut self, param: &str, value: &str) -> Result<()> {
        let bad = || Error::Config(format!("bad value `{value}` for {param}"));
        match param {
            "l" => self.tomop.l = value.parse().map_err(|_| bad())?,
            "delta" => self.tomop.delta = value.parse().map_err(|_| bad())?,
            "h" => self.detection.h = value.parse().map_err(|_| bad())?,
            "c1" => self.tomop.c1 = value.parse().map_err(|_| bad())?,
            "lambda" => self.tomop.lambda = value.parse().map_err(|_| bad())?,
            other => {
                return Err(Error::Config(format!(
                    "parameter `{other}` is not sweepable (expected l, delta, h, c1 or lambda)"
                )))
            }
        }
        self.validate()
    }
}

pub fn output_root(configured: Option<&Path>) -> PathBuf {
    match std::env::var_os(OUTPUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => configured.map_or_else(|| PathBuf::from("out"), Path::to_path_buf),
    }
}

pub fn default_store_path(root: &Path, game: GameId) -> PathBuf {
    root.join("store").join(format!("{game}.json"))
}
