//! Run parameters. Flags, an optional JSON config file and built-in
//! defaults are layered in that order.

use std::fs;
use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use ppimesh::classifier::{
    svm::{DEFAULT_C, DEFAULT_GAMMA, DEFAULT_MAX_ITERATIONS, DEFAULT_TOL},
    ClassifierConfig, KnnConfig, SvmConfig,
};
use ppimesh::features::{FeaturizerConfig, Normalization, DEFAULT_FREQUENCIES};
use ppimesh::mesh::{MeshConfig, DEFAULT_MAX_PPIS, DEFAULT_MIN_PPIS, DEFAULT_PREDICTION_THRESHOLD};
use ppimesh::seq::AlphabetMode;
use ppimesh::validation::{Trainer, DEFAULT_FOLDS, DEFAULT_THRESHOLD};

use crate::UsageError;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_MAX_DEPTH: usize = 3;
pub const DEFAULT_MIN_PROTEINS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Svm,
    Knn,
}

/// Every tunable parameter. `None` means "not set at this layer".
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalization: Option<Normalization>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alphabet: Option<AlphabetMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classifier: Option<Family>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub folds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_values: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_ppis: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_ppis: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generic_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prune: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_proteins: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub root: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random_negatives: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub allow_imbalance: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub allow_self: Option<bool>,
}

macro_rules! overlay {
    ($top:expr, $bottom:expr, $($field:ident),+) => {
        RunConfig { $($field: $top.$field.or($bottom.$field)),+ }
    };
}

impl RunConfig {
    /// Values set here win; the rest come from `lower`.
    pub fn over(self, lower: RunConfig) -> RunConfig {
        overlay!(
            self,
            lower,
            f,
            normalization,
            alphabet,
            classifier,
            c,
            gamma,
            k,
            tol,
            max_iterations,
            folds,
            seed,
            threshold,
            c_grid,
            gamma_grid,
            sweep_values,
            min_ppis,
            max_ppis,
            generic_size,
            prune,
            max_depth,
            min_proteins,
            root,
            random_negatives,
            allow_imbalance,
            allow_self
        )
    }

    /// Reads a config file. A run manifest is accepted too, in which case
    /// its recorded parameters are used.
    pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let inner = match value.get("config") {
            Some(cfg) if value.get("command").is_some() => cfg.clone(),
            _ => value,
        };
        serde_json::from_value(inner).map_err(|e| UsageError(format!("config {}: {e}", path.display())).into())
    }

    pub fn featurizer(&self) -> Result<FeaturizerConfig, UsageError> {
        let f = self.f.unwrap_or(DEFAULT_FREQUENCIES);
        if f == 0 {
            return Err(UsageError("--f must be at least 1".into()));
        }
        Ok(FeaturizerConfig {
            f,
            normalization: self.normalization.unwrap_or_default(),
            alphabet: self.alphabet.unwrap_or_default(),
        })
    }

    pub fn family(&self) -> Family {
        self.classifier.unwrap_or(Family::Svm)
    }

    pub fn svm(&self) -> Result<SvmConfig, UsageError> {
        let cfg = SvmConfig {
            c: self.c.unwrap_or(DEFAULT_C),
            gamma: self.gamma.unwrap_or(DEFAULT_GAMMA),
            tol: self.tol.unwrap_or(DEFAULT_TOL),
            max_iterations: self.max_iterations.unwrap_or(DEFAULT_MAX_ITERATIONS),
            seed: self.seed(),
        };
        positive("--c", cfg.c)?;
        positive("--gamma", cfg.gamma)?;
        positive("--tol", cfg.tol)?;
        Ok(cfg)
    }

    pub fn knn(&self) -> Result<KnnConfig, UsageError> {
        let k = self.k.unwrap_or(ppimesh::classifier::knn::DEFAULT_K);
        if k == 0 {
            return Err(UsageError("--k must be at least 1".into()));
        }
        Ok(KnnConfig { k })
    }

    pub fn classifier_config(&self) -> Result<ClassifierConfig, UsageError> {
        Ok(match self.family() {
            Family::Svm => ClassifierConfig::Svm(self.svm()?),
            Family::Knn => ClassifierConfig::Knn(self.knn()?),
        })
    }

    pub fn trainer(&self) -> Result<Trainer, UsageError> {
        Ok(Trainer::new(self.classifier_config()?, self.normalization.unwrap_or_default()))
    }

    pub fn folds(&self) -> Result<usize, UsageError> {
        let k = self.folds.unwrap_or(DEFAULT_FOLDS);
        if k < 2 {
            return Err(UsageError("--folds must be at least 2".into()));
        }
        Ok(k)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn cv_threshold(&self) -> Result<f64, UsageError> {
        unit("--threshold", self.threshold.unwrap_or(DEFAULT_THRESHOLD))
    }

    pub fn prediction_threshold(&self) -> Result<f64, UsageError> {
        unit("--threshold", self.threshold.unwrap_or(DEFAULT_PREDICTION_THRESHOLD))
    }

    pub fn mesh(&self) -> Result<MeshConfig, UsageError> {
        let cfg = MeshConfig {
            min_ppis: self.min_ppis.unwrap_or(DEFAULT_MIN_PPIS),
            max_ppis: self.max_ppis.unwrap_or(DEFAULT_MAX_PPIS),
            k_folds: self.folds()?,
            prune: self.prune.unwrap_or(true),
            generic_size: self.generic_size,
            seed: self.seed(),
        };
        if cfg.max_ppis < cfg.min_ppis || cfg.max_ppis == 0 {
            return Err(UsageError("--max-ppis must be positive and at least --min-ppis".into()));
        }
        Ok(cfg)
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth.unwrap_or(DEFAULT_MAX_DEPTH)
    }

    pub fn min_proteins(&self) -> usize {
        self.min_proteins.unwrap_or(DEFAULT_MIN_PROTEINS)
    }
}

fn positive(name: &str, v: f64) -> Result<(), UsageError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(UsageError(format!("{name} must be a positive number, got {v}")))
    }
}

fn unit(name: &str, v: f64) -> Result<f64, UsageError> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(UsageError(format!("{name} must lie in [0, 1], got {v}")))
    }
}
