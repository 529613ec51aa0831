//! The experiment file.
//!
//! ```toml
//! version = 1
//! output_dir = "out"
//!
//! [paths]
//! annotations = "corpus.pubtator"
//! triples = ["kb.tsv"]
//! # id_mapping, eval_mapping, word_vectors are optional
//!
//! [transe]   # TransE settings
//! [model]    # layers, dim, variant, knowledge, position_encoding, seed
//! [train]    # learning_rate, batch_size, epochs, seed, shuffle, ...
//! [context]  # window, keep_special
//! [rules]    # threshold
//! [eval]     # mode = "exact" | "mapped"
//! [cv]       # folds, grid = [{ layers = 1 }, ...]
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::ContextPolicy;
use crate::eval::MatchMode;
use crate::kb::TransEConfig;
use crate::model::MnmConfig;
use crate::pipeline::{TrainConfig, DEFAULT_RULE_THRESHOLD};

use super::CliError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub annotations: Option<PathBuf>,
    pub triples: Vec<PathBuf>,
    /// Applied to triple entities while loading (`source<TAB>target`).
    pub id_mapping: Option<PathBuf>,
    /// Gene id → group id, used by `eval.mode = "mapped"`.
    pub eval_mapping: Option<PathBuf>,
    pub word_vectors: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RulesConfig {
    pub threshold: usize,
}

impl Default for RulesConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_RULE_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub mode: MatchMode,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { mode: MatchMode::Exact }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    pub folds: usize,
    /// Each entry overrides keys of `[model]`; empty means `[model]` alone.
    pub grid: Vec<toml::Table>,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            grid: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub paths: Paths,
    #[serde(default)]
    pub transe: TransEConfig,
    #[serde(default)]
    pub model: MnmConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub context: ContextPolicy,
    #[serde(default)]
    pub rules: RulesConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub cv: CvConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        if cfg.version != CONFIG_VERSION {
            return Err(CliError::Usage(format!(
                "config version {} is not supported (expected {CONFIG_VERSION})",
                cfg.version
            )));
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    /// Every config in the cross-validation grid.
    pub fn grid(&self) -> Result<Vec<MnmConfig>, CliError> {
        if self.cv.grid.is_empty() {
            return Ok(vec![self.model.clone()]);
        }
        let base = toml::Table::try_from(&self.model).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        self.cv
            .grid
            .iter()
            .map(|over| {
                let mut t = base.clone();
                t.extend(over.clone());
                MnmConfig::deserialize(toml::Value::Table(t))
                    .map_err(|e| CliError::Usage(format!("cv.grid entry: {e}")))
            })
            .collect()
    }
}

/// A parsed config and the directory its relative paths start from.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub base: PathBuf,
}

impl Loaded {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Ok(Self {
            config: RunConfig::parse(&text)?,
            base: path.parent().map(Path::to_path_buf).unwrap_or_default(),
        })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.resolve(&self.config.output_dir).join(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Variant;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = RunConfig::parse("version = 1\n").unwrap();
        assert_eq!(c.model, MnmConfig::default());
        assert_eq!(c.train.learning_rate, 0.001);
        assert_eq!(c.rules.threshold, 2);
        assert_eq!(c.output_dir, PathBuf::from("out"));
    }

    #[test]
    fn unknown_keys_and_versions_are_rejected() {
        assert!(RunConfig::parse("version = 1\nbogus = 3\n").is_err());
        assert!(RunConfig::parse("version = 1\n[model]\nlayerz = 3\n").is_err());
        assert!(RunConfig::parse("version = 2\n").is_err());
        assert!(RunConfig::parse("").is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let c = RunConfig::parse(
            "version = 1\n[model]\nvariant = \"MNM-DA\"\nlayers = 2\n[cv]\ngrid = [{ layers = 1 }, { layers = 3, variant = \"MNM\" }]\n",
        )
        .unwrap();
        assert_eq!(c.model.variant, Variant::DifferentAttention);
        let back = RunConfig::parse(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
        let grid = c.grid().unwrap();
        assert_eq!(grid.len(), 2);
        assert_eq!((grid[0].layers, grid[0].variant), (1, Variant::DifferentAttention));
        assert_eq!((grid[1].layers, grid[1].variant), (3, Variant::Mnm));
    }
}
