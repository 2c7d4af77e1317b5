//! Flat JSON experiment configuration. Every field has a default, so an
//! empty document (or no `--config` at all) is a complete configuration.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use ids_core::mlp::{Optimizer, TrainConfig, BASE_HIDDEN, TRUNCATED_HIDDEN};
use ids_core::preprocess::{ClassWeights, Granularity};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Base,
    WeightedBase,
    Truncated,
    WeightedTruncated,
}

impl Variant {
    pub fn granularity(self) -> Granularity {
        match self {
            Variant::Base | Variant::WeightedBase => Granularity::Fine,
            Variant::Truncated | Variant::WeightedTruncated => Granularity::Coarse,
        }
    }

    pub fn weighted(self) -> bool {
        matches!(self, Variant::WeightedBase | Variant::WeightedTruncated)
    }

    pub fn default_hidden(self) -> Vec<usize> {
        match self.granularity() {
            Granularity::Fine => BASE_HIDDEN.to_vec(),
            Granularity::Coarse => TRUNCATED_HIDDEN.to_vec(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Base => "base",
            Variant::WeightedBase => "weighted-base",
            Variant::Truncated => "truncated",
            Variant::WeightedTruncated => "weighted-truncated",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub variant: Variant,
    /// Hidden-layer widths; the variant's default when absent.
    pub hidden: Option<Vec<usize>>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub train_seed: Option<u64>,
    pub test_fraction: f64,
    pub split_seed: Option<u64>,
    pub background_n: usize,
    pub explain_n: usize,
    /// Coalition budget; `2M + 2048` when absent.
    pub shap_budget: Option<usize>,
    pub shap_seed: Option<u64>,
    pub top_k: usize,
    /// Score reported when precision or recall has a zero denominator.
    pub zero_division: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Truncated,
            hidden: None,
            epochs: 20,
            batch_size: 1024,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::Adam,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            train_seed: None,
            test_fraction: 0.33,
            split_seed: None,
            background_n: 50,
            explain_n: 50,
            shap_budget: None,
            shap_seed: None,
            top_k: 5,
            zero_division: 1.0,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// The file at `path` if given, else the defaults.
    pub fn load_or_default(path: Option<&PathBuf>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), |p| Self::load(p))
    }

    /// Fills every unset seed with `seed`, falling back to [`DEFAULT_SEED`].
    pub fn fill_seeds(&mut self, seed: Option<u64>) {
        let s = seed.unwrap_or(DEFAULT_SEED);
        for slot in [&mut self.train_seed, &mut self.split_seed, &mut self.shap_seed] {
            slot.get_or_insert(s);
        }
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.hidden.clone().unwrap_or_else(|| self.variant.default_hidden())
    }

    pub fn train_config(&self, class_weights: Option<ClassWeights>) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            optimizer: match self.optimizer {
                OptimizerKind::Adam => Optimizer::Adam {
                    beta1: self.beta1,
                    beta2: self.beta2,
                    epsilon: self.epsilon,
                },
                OptimizerKind::Sgd => Optimizer::Sgd,
            },
            seed: self.train_seed.unwrap_or(DEFAULT_SEED),
            class_weights,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: &str| Err(CliError::Usage(format!("config field `{field}`: {why}")));
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad("test_fraction", "must lie strictly between 0 and 1");
        }
        if self.hidden.as_ref().is_some_and(|h| h.contains(&0)) {
            return bad("hidden", "widths must be positive");
        }
        if self.background_n == 0 {
            return bad("background_n", "must be >= 1");
        }
        if self.explain_n == 0 {
            return bad("explain_n", "must be >= 1");
        }
        if self.top_k == 0 {
            return bad("top_k", "must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.zero_division) {
            return bad("zero_division", "must lie in [0, 1]");
        }
        self.train_config(None).validate()?;
        Ok(())
    }
}
