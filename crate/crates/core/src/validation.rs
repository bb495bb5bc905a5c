//! Stratified k-fold cross-validation, C/gamma grid search and the
//! feature-count and neighbour-count sweeps.
//!
//! Folds and grid cells run in parallel; result tables are always assembled
//! in fold / grid order.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{ClassifierConfig, ClassifierError, KnnConfig, SvmConfig, TrainedClassifier};
use crate::features::{FeatureError, FeaturizerConfig, Normalization};
use crate::metrics::{MetricError, Metrics, ScoredSet};

pub const DEFAULT_FOLDS: usize = 5;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("cannot split {n} instances ({positives} positive) into {k} stratified folds")]
    TooFewInstances { n: usize, positives: usize, k: usize },
    #[error("fold count must be at least 2")]
    TooFewFolds,
    #[error("training split of fold {0} contains a single class")]
    SingleClassFold(usize),
    #[error("empty parameter grid")]
    EmptyGrid,
    #[error("{rows} feature rows but {labels} labels")]
    LabelCount { rows: usize, labels: usize },
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Instance-to-fold assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub n: usize,
    pub k_folds: usize,
    pub seed: u64,
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    /// `(train, test)` index lists for one fold.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.n).partition(|&i| self.assignments[i] != fold)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k_folds];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Seeded stratified partition. Each class is shuffled and dealt round-robin;
/// the negatives continue the rotation where the positives stopped so fold
/// sizes stay within one of each other.
pub fn make_folds(labels: &[u8], k_folds: usize, seed: u64) -> Result<FoldPlan, ValidationError> {
    if k_folds < 2 {
        return Err(ValidationError::TooFewFolds);
    }
    let mut positives: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let mut negatives: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] != 1).collect();
    if positives.len() < k_folds || negatives.len() < k_folds {
        return Err(ValidationError::TooFewInstances { n: labels.len(), positives: positives.len(), k: k_folds });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    positives.shuffle(&mut rng);
    negatives.shuffle(&mut rng);
    let mut assignments = vec![0; labels.len()];
    for (slot, &i) in positives.iter().chain(&negatives).enumerate() {
        assignments[i] = slot % k_folds;
    }
    Ok(FoldPlan { n: labels.len(), k_folds, seed, assignments })
}

/// Classifier family plus the normalization applied before it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trainer {
    pub classifier: ClassifierConfig,
    pub normalization: Normalization,
}

impl Trainer {
    pub fn new(classifier: ClassifierConfig, normalization: Normalization) -> Self {
        Trainer { classifier, normalization }
    }

    pub fn fit(&self, rows: &[Vec<f64>], labels: &[u8]) -> Result<TrainedClassifier, ClassifierError> {
        TrainedClassifier::fit(rows, labels, &self.classifier, self.normalization)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<Metrics>,
    pub mean: Metrics,
    pub seed: u64,
}

impl CvReport {
    /// `fold\tprecision\trecall\tauc`, one row per fold then a `mean` row.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "fold\tprecision\trecall\tauc")?;
        for (i, m) in self.folds.iter().enumerate() {
            writeln!(out, "{}\t{}\t{}\t{}", i + 1, m.precision, m.recall, m.auc)?;
        }
        writeln!(out, "mean\t{}\t{}\t{}", self.mean.precision, self.mean.recall, self.mean.auc)
    }
}

fn gather<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| items[i].clone()).collect()
}

/// Fits `trainer` on the training split of `fold`; held-out rows are never read.
pub fn fit_fold(
    rows: &[Vec<f64>],
    labels: &[u8],
    plan: &FoldPlan,
    fold: usize,
    trainer: &Trainer,
) -> Result<TrainedClassifier, ValidationError> {
    let (train, _) = plan.split(fold);
    let train_labels = gather(labels, &train);
    if !(train_labels.contains(&0) && train_labels.contains(&1)) {
        return Err(ValidationError::SingleClassFold(fold));
    }
    Ok(trainer.fit(&gather(rows, &train), &train_labels)?)
}

/// Fits on each training split only and scores the held-out split.
pub fn cross_validate(
    rows: &[Vec<f64>],
    labels: &[u8],
    trainer: &Trainer,
    k_folds: usize,
    seed: u64,
    threshold: f64,
) -> Result<CvReport, ValidationError> {
    if rows.len() != labels.len() {
        return Err(ValidationError::LabelCount { rows: rows.len(), labels: labels.len() });
    }
    let plan = make_folds(labels, k_folds, seed)?;
    let folds = (0..k_folds)
        .into_par_iter()
        .map(|fold| {
            let model = fit_fold(rows, labels, &plan, fold, trainer)?;
            let (_, test) = plan.split(fold);
            let scores = model.score_all(&gather(rows, &test))?;
            let set = ScoredSet::new(scores, gather(labels, &test))?;
            Ok(Metrics::evaluate(&set, threshold)?)
        })
        .collect::<Result<Vec<_>, ValidationError>>()?;
    let mean = Metrics::mean(&folds);
    Ok(CvReport { folds, mean, seed })
}

/// Decade grid `10^lo ..= 10^hi`.
pub fn decade_grid(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|e| format!("1e{e}").parse().expect("valid literal")).collect()
}

/// C from 0.01 to 1e6.
pub fn default_c_grid() -> Vec<f64> {
    decade_grid(-2, 6)
}

/// gamma from 1e-9 to 100.
pub fn default_gamma_grid() -> Vec<f64> {
    decade_grid(-9, 2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub c: f64,
    pub gamma: f64,
    pub mean_auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    /// Row-major over (C, gamma) in the order the grids were given.
    pub cells: Vec<GridCell>,
    pub best: usize,
}

impl GridReport {
    pub fn best_cell(&self) -> GridCell {
        self.cells[self.best]
    }

    /// `C\tgamma\tmean_auc` rows followed by an `argmax` line.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "C\tgamma\tmean_auc")?;
        for cell in &self.cells {
            writeln!(out, "{}\t{}\t{}", cell.c, cell.gamma, cell.mean_auc)?;
        }
        let b = self.best_cell();
        writeln!(out, "argmax\t{}\t{}\t{}", b.c, b.gamma, b.mean_auc)
    }
}

/// Exhaustive SVM grid search on mean cross-validated AUC. Ties go to the
/// smaller C, then the smaller gamma.
#[allow(clippy::too_many_arguments)]
pub fn grid_search(
    rows: &[Vec<f64>],
    labels: &[u8],
    c_grid: &[f64],
    gamma_grid: &[f64],
    base: &SvmConfig,
    normalization: Normalization,
    k_folds: usize,
    seed: u64,
) -> Result<GridReport, ValidationError> {
    if c_grid.is_empty() || gamma_grid.is_empty() {
        return Err(ValidationError::EmptyGrid);
    }
    let params: Vec<(f64, f64)> = c_grid.iter().flat_map(|&c| gamma_grid.iter().map(move |&g| (c, g))).collect();
    let cells = params
        .par_iter()
        .map(|&(c, gamma)| {
            let trainer = Trainer::new(ClassifierConfig::Svm(SvmConfig { c, gamma, ..*base }), normalization);
            let report = cross_validate(rows, labels, &trainer, k_folds, seed, DEFAULT_THRESHOLD)?;
            Ok(GridCell { c, gamma, mean_auc: report.mean.auc })
        })
        .collect::<Result<Vec<_>, ValidationError>>()?;
    let best = (0..cells.len())
        .min_by(|&a, &b| {
            let (x, y) = (&cells[a], &cells[b]);
            y.mean_auc.total_cmp(&x.mean_auc).then(x.c.total_cmp(&y.c)).then(x.gamma.total_cmp(&y.gamma))
        })
        .expect("grid is non-empty");
    Ok(GridReport { cells, best })
}

/// `(parameter, mean AUC)` rows of a one-dimensional sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub parameter: String,
    pub rows: Vec<(usize, f64)>,
}

impl SweepTable {
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}\tmean_auc", self.parameter)?;
        for (p, auc) in &self.rows {
            writeln!(out, "{p}\t{auc}")?;
        }
        Ok(())
    }

    pub fn auc_at(&self, value: usize) -> Option<f64> {
        self.rows.iter().find(|(p, _)| *p == value).map(|&(_, a)| a)
    }
}

/// Re-featurizes the corpus at each budget and cross-validates.
///
/// `featurize` maps a featurizer config to `(rows, labels)`.
pub fn sweep_feature_count<F>(
    f_values: &[usize],
    base: &FeaturizerConfig,
    trainer: &Trainer,
    k_folds: usize,
    seed: u64,
    featurize: F,
) -> Result<SweepTable, ValidationError>
where
    F: Fn(&FeaturizerConfig) -> Result<(Vec<Vec<f64>>, Vec<u8>), FeatureError> + Sync,
{
    if f_values.is_empty() {
        return Err(ValidationError::EmptyGrid);
    }
    let mut rows = Vec::with_capacity(f_values.len());
    for &f in f_values {
        let cfg = FeaturizerConfig { f, ..*base };
        let (x, y) = featurize(&cfg)?;
        let trainer = Trainer { normalization: cfg.normalization, ..*trainer };
        let report = cross_validate(&x, &y, &trainer, k_folds, seed, DEFAULT_THRESHOLD)?;
        rows.push((f, report.mean.auc));
    }
    Ok(SweepTable { parameter: "F".into(), rows })
}

/// Mean cross-validated AUC of kNN for each neighbour count.
pub fn sweep_k(
    rows: &[Vec<f64>],
    labels: &[u8],
    k_values: &[usize],
    normalization: Normalization,
    k_folds: usize,
    seed: u64,
) -> Result<SweepTable, ValidationError> {
    if k_values.is_empty() {
        return Err(ValidationError::EmptyGrid);
    }
    let out = k_values
        .par_iter()
        .map(|&k| {
            let trainer = Trainer::new(ClassifierConfig::Knn(KnnConfig { k }), normalization);
            let report = cross_validate(rows, labels, &trainer, k_folds, seed, DEFAULT_THRESHOLD)?;
            Ok((k, report.mean.auc))
        })
        .collect::<Result<Vec<_>, ValidationError>>()?;
    Ok(SweepTable { parameter: "k".into(), rows: out })
}
