//! JSON run configuration shared by every CLI subcommand.
//!
//! Every field has a default, so `{}` is a valid file. Example:
//!
//! ```json
//! {
//!   "seed": 7,
//!   "dataset": { "n": 600, "noise": { "scale_log_sigma": 0.3 } },
//!   "training": { "trajnet": { "epochs": 150, "anneal_epochs": 30 } },
//!   "paths": { "data": "data", "models": "models" }
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::eval::BenchmarkConfig;
use crate::formats::read_json;
use crate::pipeline::PipelineConfig;
use crate::scenegen::DatasetConfig;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderConfig {
    /// Output pixels per depth pixel.
    pub scale: usize,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self { scale: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub data: PathBuf,
    pub models: PathBuf,
    pub out: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            data: "data".into(),
            models: "models".into(),
            out: "out".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Master seed; replaces the dataset seed and derives training seeds.
    pub seed: Option<u64>,
    pub dataset: DatasetConfig,
    pub training: PipelineConfig,
    pub benchmark: BenchmarkConfig,
    pub render: RenderConfig,
    pub paths: Paths,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            dataset: DatasetConfig::default(),
            training: PipelineConfig::desk(),
            benchmark: BenchmarkConfig::default(),
            render: RenderConfig::default(),
            paths: Paths::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: Self = read_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.dataset.validate()?;
        for t in [&self.training.trajnet, &self.training.depthnet, &self.training.finetune, &self.training.regression] {
            t.validate()?;
        }
        Ok(())
    }

    /// Applies the master seed, if any, to the dataset and training stages.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed.or(self.seed) {
            self.seed = Some(s);
            self.dataset.seed = s;
            self.training = self.training.with_seed(s);
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_default() {
        let cfg: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn partial_override() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"seed": 7, "dataset": {"n": 12, "noise": {"scale_log_sigma": 0.3}}}"#).unwrap();
        assert_eq!(cfg.dataset.n, 12);
        assert_eq!(cfg.dataset.noise.scale_log_sigma, 0.3);
        assert_eq!(cfg.dataset.noise.bias_frequency, 2.0);
        let seeded = cfg.with_seed(None);
        assert_eq!(seeded.dataset.seed, 7);
        assert_eq!(seeded.clone().with_seed(Some(9)).training.trajnet.seed, 9);
    }

    #[test]
    fn bad_config_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"dataset": {"split": [0.5, 0.5, 0.5]}}"#).unwrap();
        assert!(RunConfig::load(&path).is_err());
        std::fs::write(&path, r#"{"dataset": {"n": "many"}}"#).unwrap();
        assert!(RunConfig::load(&path).is_err());
    }
}
