//! Experiment configuration: a flat TOML document.
//!
//! ```toml
//! version = 1
//! train_samples = 20000      # M
//! test_sets = 20
//! test_set_size = 20000      # N
//! k = 54
//! tree_steps = 500
//! widths = [5, 64, 64, 64, 1]
//! grid_points = 40
//! epochs = 20
//! batch_size = 100
//! validation_fraction = 0.2
//! learning_rate = 0.001
//! adam_beta1 = 0.9
//! adam_beta2 = 0.999
//! adam_epsilon = 1e-8
//! master_seed = 2024
//! output_dir = "out"
//! ```
//!
//! Every key is optional in a file; missing keys keep the base preset.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mlp::{TrainConfig, DESK_WIDTHS, PAPER_WIDTHS};
use crate::rng::derive_seed;

pub const CONFIG_VERSION: u32 = 1;

/// `k = round(rate · N)` with the rate that gives `k = 270` at `N = 10^5`.
pub const DEFAULT_K_RATE: f64 = 0.0027;

/// The common rule of thumb `k/N ≈ 1%`.
pub const ALT_K_RATE: f64 = 0.01;

pub fn k_for(n: usize, rate: f64) -> usize {
    ((rate * n as f64).round() as usize).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub train_samples: usize,
    pub test_sets: usize,
    pub test_set_size: usize,
    pub k: usize,
    pub tree_steps: usize,
    pub widths: Vec<usize>,
    pub grid_points: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub validation_fraction: f64,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub master_seed: u64,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Minutes-scale run on a single machine.
    pub fn desk() -> Self {
        let t = TrainConfig::default();
        Self {
            version: CONFIG_VERSION,
            train_samples: 20_000,
            test_sets: 20,
            test_set_size: 20_000,
            k: k_for(20_000, DEFAULT_K_RATE),
            tree_steps: 500,
            widths: DESK_WIDTHS.to_vec(),
            grid_points: 40,
            epochs: t.epochs,
            batch_size: t.batch_size,
            validation_fraction: t.validation_fraction,
            learning_rate: t.learning_rate,
            adam_beta1: t.adam_beta1,
            adam_beta2: t.adam_beta2,
            adam_epsilon: t.adam_epsilon,
            master_seed: 2024,
            output_dir: PathBuf::from("out"),
        }
    }

    /// Full-size run: 10^5 training contracts, 100 test sets of 10^5, k = 270,
    /// three hidden layers of 300 units.
    pub fn paper() -> Self {
        Self {
            train_samples: 100_000,
            test_sets: 100,
            test_set_size: 100_000,
            k: 270,
            tree_steps: 1000,
            widths: PAPER_WIDTHS.to_vec(),
            ..Self::desk()
        }
    }

    pub fn preset(paper_scale: bool) -> Self {
        if paper_scale {
            Self::paper()
        } else {
            Self::desk()
        }
    }

    /// Overlays the keys present in `text` onto `base`.
    pub fn from_toml_str(text: &str, base: &ExperimentConfig) -> Result<Self> {
        let overlay: toml::Table = toml::from_str(text).map_err(|e| Error::parse("<config>", e))?;
        let mut merged = toml::Table::try_from(base).map_err(|e| Error::parse("<config>", e))?;
        for (key, value) in overlay {
            merged.insert(key, value);
        }
        let config: ExperimentConfig = merged.try_into().map_err(|e| Error::parse("<config>", e))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>, base: &ExperimentConfig) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, base).map_err(|e| match e {
            Error::Parse { detail, .. } => Error::parse(path, detail),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config fields are all TOML-representable")
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            validation_fraction: self.validation_fraction,
            learning_rate: self.learning_rate,
            adam_beta1: self.adam_beta1,
            adam_beta2: self.adam_beta2,
            adam_epsilon: self.adam_epsilon,
            seed: derive_seed(self.master_seed, "train", 0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::invalid("version", self.version, "unsupported config version"));
        }
        for (name, v) in [
            ("train_samples", self.train_samples),
            ("test_sets", self.test_sets),
            ("test_set_size", self.test_set_size),
            ("k", self.k),
            ("tree_steps", self.tree_steps),
        ] {
            if v == 0 {
                return Err(Error::invalid(name, v, "must be at least 1"));
            }
        }
        if 2 * self.k > self.test_set_size {
            return Err(Error::invalid("k", self.k, "2k must not exceed test_set_size"));
        }
        if self.grid_points < 2 {
            return Err(Error::invalid("grid_points", self.grid_points, "must be at least 2"));
        }
        self.train_config().validate()?;
        crate::mlp::init_model(&self.widths, 0).map(|_| ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        ExperimentConfig::desk().validate().unwrap();
        ExperimentConfig::paper().validate().unwrap();
        assert_eq!(ExperimentConfig::desk().k, 54);
        assert_eq!(k_for(100_000, DEFAULT_K_RATE), 270);
        assert_eq!(k_for(100_000, ALT_K_RATE), 1000);
    }

    #[test]
    fn overlay_and_round_trip() {
        let c = ExperimentConfig::from_toml_str("k = 10\ntest_sets = 3\n", &ExperimentConfig::desk()).unwrap();
        assert_eq!((c.k, c.test_sets, c.train_samples), (10, 3, 20_000));
        let again = ExperimentConfig::from_toml_str(&c.to_toml(), &ExperimentConfig::paper()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn errors_name_the_field() {
        let base = ExperimentConfig::desk();
        let e = ExperimentConfig::from_toml_str("kk = 3", &base).unwrap_err().to_string();
        assert!(e.contains("kk"), "{e}");
        let e = ExperimentConfig::from_toml_str("k = \"many\"", &base).unwrap_err().to_string();
        assert!(e.contains('k'), "{e}");
        let e = ExperimentConfig::from_toml_str("k = 20000", &base).unwrap_err().to_string();
        assert!(e.contains("k = 20000"), "{e}");
        assert!(ExperimentConfig::from_toml_str("version = 2", &base).is_err());
    }

    #[test]
    fn training_seed_ignores_test_layout() {
        let a = ExperimentConfig::desk();
        let b = ExperimentConfig { test_sets: 7, test_set_size: 500, k: 3, ..a.clone() };
        assert_eq!(a.train_config(), b.train_config());
    }
}
