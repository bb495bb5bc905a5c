//! Native kNN and RBF-SVM classifiers plus a serializable wrapper that
//! carries the fitted feature normalization alongside the model.

pub mod kernel;
pub mod knn;
pub mod svm;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use kernel::rbf_kernel;
pub use knn::{knn_predict, knn_train, KnnConfig, KnnModel};
pub use svm::{logistic, svm_train, SvmConfig, SvmModel};

use crate::features::{FeatureError, FeaturizerConfig, Normalization, Standardizer};

/// Format tag and version written into every classifier document.
pub const CLASSIFIER_FORMAT: &str = "ppimesh-classifier";
pub const CLASSIFIER_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("no training rows")]
    Empty,
    #[error("{features} feature rows but {labels} labels")]
    LabelCount { features: usize, labels: usize },
    #[error("label {0} is not 0 or 1")]
    InvalidLabel(u8),
    #[error("training data contains a single class")]
    SingleClass,
    #[error("k = {k} exceeds the {n} training rows")]
    TooFewRows { k: usize, n: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unsupported classifier document: {0}")]
    Format(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Checks row/label agreement and returns the feature dimension.
pub(crate) fn check_labels(features: &[Vec<f64>], labels: &[u8]) -> Result<usize, ClassifierError> {
    if features.is_empty() {
        return Err(ClassifierError::Empty);
    }
    if features.len() != labels.len() {
        return Err(ClassifierError::LabelCount { features: features.len(), labels: labels.len() });
    }
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(ClassifierError::InvalidLabel(bad));
    }
    Ok(features[0].len())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ClassifierConfig {
    Svm(SvmConfig),
    Knn(KnnConfig),
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig::Svm(SvmConfig::default())
    }
}

impl ClassifierConfig {
    pub fn family(&self) -> &'static str {
        match self {
            ClassifierConfig::Svm(_) => "svm",
            ClassifierConfig::Knn(_) => "knn",
        }
    }

    /// Same configuration with a different solver seed (kNN has none).
    pub fn reseeded(&self, seed: u64) -> Self {
        match *self {
            ClassifierConfig::Svm(cfg) => ClassifierConfig::Svm(SvmConfig { seed, ..cfg }),
            knn => knn,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Model {
    Svm(SvmModel),
    Knn(KnnModel),
}

impl Model {
    pub fn fit(features: &[Vec<f64>], labels: &[u8], cfg: &ClassifierConfig) -> Result<Self, ClassifierError> {
        match cfg {
            ClassifierConfig::Svm(c) => svm_train(features, labels, c).map(Model::Svm),
            ClassifierConfig::Knn(c) => knn_train(features, labels, c).map(Model::Knn),
        }
    }

    pub fn score(&self, x: &[f64]) -> Result<f64, ClassifierError> {
        match self {
            Model::Svm(m) => m.score(x),
            Model::Knn(m) => m.score(x),
        }
    }
}

/// A model together with the per-position normalization fitted on its
/// training rows. Scores are in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedClassifier {
    pub standardizer: Option<Standardizer>,
    pub model: Model,
}

impl TrainedClassifier {
    /// Fits normalization (when per-position) and then the model, on the
    /// given rows only.
    pub fn fit(
        features: &[Vec<f64>],
        labels: &[u8],
        cfg: &ClassifierConfig,
        normalization: Normalization,
    ) -> Result<Self, ClassifierError> {
        check_labels(features, labels)?;
        if normalization == Normalization::ZScorePerPosition {
            let standardizer = Standardizer::fit(features)?;
            let scaled = standardizer.transform_all(features);
            let model = Model::fit(&scaled, labels, cfg)?;
            Ok(TrainedClassifier { standardizer: Some(standardizer), model })
        } else {
            Ok(TrainedClassifier { standardizer: None, model: Model::fit(features, labels, cfg)? })
        }
    }

    pub fn score(&self, x: &[f64]) -> Result<f64, ClassifierError> {
        match &self.standardizer {
            Some(st) => {
                if x.len() != st.dim() {
                    return Err(ClassifierError::DimensionMismatch { expected: st.dim(), found: x.len() });
                }
                self.model.score(&st.transform(x))
            }
            None => self.model.score(x),
        }
    }

    pub fn score_all(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>, ClassifierError> {
        rows.iter().map(|r| self.score(r)).collect()
    }
}

/// Self-describing on-disk form of one classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierDocument {
    pub format: String,
    pub version: u32,
    pub featurizer: FeaturizerConfig,
    pub config: ClassifierConfig,
    pub classifier: TrainedClassifier,
}

impl ClassifierDocument {
    pub fn new(featurizer: FeaturizerConfig, config: ClassifierConfig, classifier: TrainedClassifier) -> Self {
        ClassifierDocument {
            format: CLASSIFIER_FORMAT.to_string(),
            version: CLASSIFIER_FORMAT_VERSION,
            featurizer,
            config,
            classifier,
        }
    }

    pub fn write<W: Write>(&self, out: W) -> Result<(), ClassifierError> {
        serde_json::to_writer(out, self)?;
        Ok(())
    }

    pub fn read<R: Read>(input: R) -> Result<Self, ClassifierError> {
        let doc: ClassifierDocument = serde_json::from_reader(input)?;
        if doc.format != CLASSIFIER_FORMAT {
            return Err(ClassifierError::Format(format!("format '{}'", doc.format)));
        }
        if doc.version != CLASSIFIER_FORMAT_VERSION {
            return Err(ClassifierError::Format(format!(
                "version {} (this build reads {})",
                doc.version, CLASSIFIER_FORMAT_VERSION
            )));
        }
        Ok(doc)
    }
}
