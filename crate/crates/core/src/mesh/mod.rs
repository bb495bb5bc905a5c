//! Mesh of per-GO-pair classifiers with a generic fallback.
//!
//! Training pairs are grouped by the canonical pair of selected GO terms of
//! their two proteins; each sufficiently large group gets its own
//! classifier. A query pair is scored by every applicable cell and the
//! maximum wins, or by the generic classifier when no cell applies.

pub mod annotations;
pub mod ontology;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use annotations::AnnotationStore;
pub use ontology::{trim_ontology, OntologyGraph, TermMapper, TermSelection, MF_ROOT};

use crate::classifier::{ClassifierDocument, ClassifierError, TrainedClassifier};
use crate::dataset::PairKey;
use crate::features::{featurize_pair, FeatureError, FeatureVector, FeaturizerConfig};
use crate::validation::{cross_validate, Trainer, ValidationError, DEFAULT_FOLDS, DEFAULT_THRESHOLD};

pub const DEFAULT_MIN_PPIS: usize = 500;
pub const DEFAULT_MAX_PPIS: usize = 5000;
pub const DEFAULT_PREDICTION_THRESHOLD: f64 = 0.9;

pub const MESH_FORMAT: &str = "ppimesh-mesh";
pub const MESH_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("ontology has no parentless term")]
    NoRoot,
    #[error("ontology has several parentless terms: {0:?}")]
    AmbiguousRoot(Vec<String>),
    #[error("ontology contains a cycle through {0}")]
    Cycle(String),
    #[error("malformed {what} row at line {line}")]
    Parse { what: &'static str, line: usize },
    #[error("no training pairs")]
    Empty,
    #[error("{rows} feature rows but {labels} labels")]
    LabelCount { rows: usize, labels: usize },
    #[error("generic training sample contains a single class")]
    GenericSingleClass,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unsupported mesh: {0}")]
    Format(String),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Canonically ordered pair of selected GO terms, `m <= n`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub m: String,
    pub n: String,
}

impl CellKey {
    pub fn new(x: &str, y: &str) -> Self {
        let (m, n) = if x <= y { (x, y) } else { (y, x) };
        CellKey { m: m.to_string(), n: n.to_string() }
    }
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.m, self.n)
    }
}

/// Every cell key formed from one term of each side.
pub fn cell_keys(terms_a: &BTreeSet<String>, terms_b: &BTreeSet<String>) -> BTreeSet<CellKey> {
    terms_a.iter().flat_map(|m| terms_b.iter().map(move |n| CellKey::new(m, n))).collect()
}

/// Pair indices per cell plus the pairs with an unannotated side.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Clustering {
    pub cells: BTreeMap<CellKey, Vec<usize>>,
    pub generic_pool: Vec<usize>,
}

/// Groups pairs all-vs-all by their resolved terms. A pair joins each
/// distinct cell once; pairs with an empty side go to the generic pool.
pub fn cluster_pairs<F>(pairs: &[PairKey], resolve: F) -> Clustering
where
    F: Fn(&str) -> BTreeSet<String>,
{
    let mut memo: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    for p in pairs {
        for id in [p.a.as_str(), p.b.as_str()] {
            if !memo.contains_key(id) {
                memo.insert(id, resolve(id));
            }
        }
    }
    let mut out = Clustering::default();
    for (i, p) in pairs.iter().enumerate() {
        let (ta, tb) = (&memo[p.a.as_str()], &memo[p.b.as_str()]);
        if ta.is_empty() || tb.is_empty() {
            out.generic_pool.push(i);
            continue;
        }
        for key in cell_keys(ta, tb) {
            out.cells.entry(key).or_default().push(i);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshConfig {
    pub min_ppis: usize,
    pub max_ppis: usize,
    pub k_folds: usize,
    /// Drop cells whose CV AUC does not beat the generic classifier.
    pub prune: bool,
    /// Generic training sample size; `None` means twice `max_ppis`.
    pub generic_size: Option<usize>,
    pub seed: u64,
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig {
            min_ppis: DEFAULT_MIN_PPIS,
            max_ppis: DEFAULT_MAX_PPIS,
            k_folds: DEFAULT_FOLDS,
            prune: true,
            generic_size: None,
            seed: 0,
        }
    }
}

impl MeshConfig {
    pub fn generic_cap(&self) -> usize {
        self.generic_size.unwrap_or(2 * self.max_ppis)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Serving,
    Pruned,
    TooFew,
    SingleClass,
    Failed,
}

impl fmt::Display for CellStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CellStatus::Serving => "serving",
            CellStatus::Pruned => "pruned",
            CellStatus::TooFew => "too_few",
            CellStatus::SingleClass => "single_class",
            CellStatus::Failed => "failed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellProvenance {
    pub key: CellKey,
    pub available: usize,
    pub n_train: usize,
    pub n_positive: usize,
    pub cv_auc: Option<f64>,
    pub status: CellStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenericProvenance {
    pub n_train: usize,
    pub n_positive: usize,
    pub cv_auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// In key order, including cells that do not serve.
    pub cells: Vec<CellProvenance>,
    pub generic: GenericProvenance,
}

impl Provenance {
    pub fn serving(&self) -> impl Iterator<Item = &CellProvenance> {
        self.cells.iter().filter(|c| c.status == CellStatus::Serving)
    }

    /// `go_pair\tn_train\tcv_auc`: serving cells by AUC descending, then the
    /// generic classifier and the mean over serving cells.
    pub fn write_summary_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut serving: Vec<&CellProvenance> = self.serving().collect();
        serving.sort_by(|a, b| {
            b.cv_auc.unwrap_or(f64::NAN).total_cmp(&a.cv_auc.unwrap_or(f64::NAN)).then_with(|| a.key.cmp(&b.key))
        });
        writeln!(out, "go_pair\tn_train\tcv_auc")?;
        for c in &serving {
            writeln!(out, "{}\t{}\t{}", c.key, c.n_train, c.cv_auc.unwrap_or(f64::NAN))?;
        }
        writeln!(out, "Generic\t{}\t{}", self.generic.n_train, self.generic.cv_auc)?;
        if serving.is_empty() {
            writeln!(out, "Average\t0\tNA")
        } else {
            let mean = serving.iter().filter_map(|c| c.cv_auc).sum::<f64>() / serving.len() as f64;
            let n = serving.iter().map(|c| c.n_train).sum::<usize>() / serving.len();
            writeln!(out, "Average\t{n}\t{mean}")
        }
    }

    /// Every cell with its status and counts.
    pub fn write_cells_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "go_pair\tstatus\tavailable\tn_train\tn_positive\tcv_auc")?;
        for c in &self.cells {
            let auc = c.cv_auc.map(|a| a.to_string()).unwrap_or_else(|| "NA".into());
            writeln!(out, "{}\t{}\t{}\t{}\t{}\t{}", c.key, c.status, c.available, c.n_train, c.n_positive, auc)?;
        }
        Ok(())
    }
}

/// Seeded class-stratified subsample of `idx` with at most `cap` entries.
/// The positive count is the class share of `cap` rounded to nearest, so
/// the ratio is kept within one pair. The result is sorted.
pub fn stratified_sample(idx: &[usize], labels: &[u8], cap: usize, seed: u64) -> Vec<usize> {
    if idx.len() <= cap {
        return idx.to_vec();
    }
    let (mut pos, mut neg): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| labels[i] == 1);
    let total = idx.len();
    let n_pos = ((cap * pos.len() + total / 2) / total).min(pos.len());
    let n_neg = (cap - n_pos).min(neg.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut out: Vec<usize> = pos[..n_pos].iter().chain(&neg[..n_neg]).copied().collect();
    out.sort_unstable();
    out
}

/// Per-job seed derived from the run seed and a label.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

fn positives(idx: &[usize], labels: &[u8]) -> usize {
    idx.iter().filter(|&&i| labels[i] == 1).count()
}

fn gather_rows(rows: &[Vec<f64>], idx: &[usize]) -> Vec<Vec<f64>> {
    idx.iter().map(|&i| rows[i].clone()).collect()
}

fn gather_labels(labels: &[u8], idx: &[usize]) -> Vec<u8> {
    idx.iter().map(|&i| labels[i]).collect()
}

/// CV on the sample, then a final fit on all of it.
fn train_sample(
    rows: &[Vec<f64>],
    labels: &[u8],
    idx: &[usize],
    trainer: &Trainer,
    k_folds: usize,
    seed: u64,
) -> Result<(TrainedClassifier, f64), MeshError> {
    let x = gather_rows(rows, idx);
    let y = gather_labels(labels, idx);
    let trainer = Trainer { classifier: trainer.classifier.reseeded(seed), ..*trainer };
    let cv = cross_validate(&x, &y, &trainer, k_folds, seed, DEFAULT_THRESHOLD)?;
    Ok((trainer.fit(&x, &y)?, cv.mean.auc))
}

/// Immutable trained mesh. Safe to share across scoring threads.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshModel {
    pub featurizer: FeaturizerConfig,
    pub trainer: Trainer,
    pub config: MeshConfig,
    pub term_mapper: TermMapper,
    pub cells: BTreeMap<CellKey, TrainedClassifier>,
    pub generic: TrainedClassifier,
    pub provenance: Provenance,
}

/// Trains the generic classifier and one classifier per qualifying cell.
///
/// `rows[i]` is the canonical pair vector of training pair `i`. Cells
/// train in parallel; results are keyed so the outcome does not depend on
/// scheduling.
pub fn train_mesh(
    rows: &[Vec<f64>],
    labels: &[u8],
    clustering: &Clustering,
    featurizer: &FeaturizerConfig,
    trainer: &Trainer,
    term_mapper: TermMapper,
    cfg: &MeshConfig,
) -> Result<MeshModel, MeshError> {
    if rows.is_empty() {
        return Err(MeshError::Empty);
    }
    if rows.len() != labels.len() {
        return Err(MeshError::LabelCount { rows: rows.len(), labels: labels.len() });
    }
    let dim = featurizer.pair_dim();
    if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
        return Err(MeshError::DimensionMismatch { expected: dim, found: bad.len() });
    }

    let all: Vec<usize> = (0..rows.len()).collect();
    let generic_idx = stratified_sample(&all, labels, cfg.generic_cap(), derive_seed(cfg.seed, "generic"));
    let generic_pos = positives(&generic_idx, labels);
    if generic_pos == 0 || generic_pos == generic_idx.len() {
        return Err(MeshError::GenericSingleClass);
    }
    let (generic, generic_auc) =
        train_sample(rows, labels, &generic_idx, trainer, cfg.k_folds, derive_seed(cfg.seed, "generic"))?;
    log::info!("generic classifier: {} pairs, CV AUC {generic_auc:.4}", generic_idx.len());

    let jobs: Vec<(&CellKey, &Vec<usize>)> = clustering.cells.iter().collect();
    let trained: Vec<(CellProvenance, Option<TrainedClassifier>)> = jobs
        .par_iter()
        .map(|&(key, idx)| {
            let mut prov = CellProvenance {
                key: key.clone(),
                available: idx.len(),
                n_train: 0,
                n_positive: 0,
                cv_auc: None,
                status: CellStatus::TooFew,
            };
            if idx.len() < cfg.min_ppis {
                return (prov, None);
            }
            let seed = derive_seed(cfg.seed, &key.to_string());
            let sample = stratified_sample(idx, labels, cfg.max_ppis, seed);
            prov.n_train = sample.len();
            prov.n_positive = positives(&sample, labels);
            if prov.n_positive == 0 || prov.n_positive == sample.len() {
                log::warn!("cell {key}: single-class sample, dropped");
                prov.status = CellStatus::SingleClass;
                return (prov, None);
            }
            match train_sample(rows, labels, &sample, trainer, cfg.k_folds, seed) {
                Ok((model, auc)) => {
                    prov.cv_auc = Some(auc);
                    prov.status =
                        if cfg.prune && auc <= generic_auc { CellStatus::Pruned } else { CellStatus::Serving };
                    let keep = (prov.status == CellStatus::Serving).then_some(model);
                    (prov, keep)
                }
                Err(e) => {
                    log::warn!("cell {key}: training failed ({e}), dropped");
                    prov.status = CellStatus::Failed;
                    (prov, None)
                }
            }
        })
        .collect();

    let mut cells = BTreeMap::new();
    let mut provenance = Vec::with_capacity(trained.len());
    for (prov, model) in trained {
        if let Some(m) = model {
            cells.insert(prov.key.clone(), m);
        }
        provenance.push(prov);
    }
    if cells.is_empty() {
        log::warn!("no cell qualified; the mesh serves the generic classifier only");
    }
    Ok(MeshModel {
        featurizer: *featurizer,
        trainer: *trainer,
        config: *cfg,
        term_mapper,
        cells,
        generic,
        provenance: Provenance {
            cells: provenance,
            generic: GenericProvenance { n_train: generic_idx.len(), n_positive: generic_pos, cv_auc: generic_auc },
        },
    })
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Chosen {
    Cell(CellKey),
    Generic,
}

impl fmt::Display for Chosen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Chosen::Cell(k) => k.fmt(f),
            Chosen::Generic => f.write_str("generic"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub score: f64,
    pub chosen: Chosen,
    /// Applicable cells in key order with their scores.
    pub consulted: Vec<(CellKey, f64)>,
}

/// Highest score; equal scores go to the earliest key.
pub fn max_consulted(consulted: &[(CellKey, f64)]) -> Option<(&CellKey, f64)> {
    let mut best: Option<(&CellKey, f64)> = None;
    for (k, s) in consulted {
        if best.is_none_or(|(_, b)| *s > b) {
            best = Some((k, *s));
        }
    }
    best
}

/// One ranked output row.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub key: PairKey,
    pub score: f64,
    pub chosen: Chosen,
    pub predicted: u8,
}

impl MeshModel {
    /// Scores a canonical pair vector given the selected terms of both sides.
    pub fn score_pair(
        &self,
        x: &[f64],
        terms_a: &BTreeSet<String>,
        terms_b: &BTreeSet<String>,
    ) -> Result<ScoreReport, MeshError> {
        let dim = self.featurizer.pair_dim();
        if x.len() != dim {
            return Err(MeshError::DimensionMismatch { expected: dim, found: x.len() });
        }
        let mut consulted = Vec::new();
        for key in cell_keys(terms_a, terms_b) {
            if let Some(model) = self.cells.get(&key) {
                let s = model.score(x)?;
                consulted.push((key, s));
            }
        }
        match max_consulted(&consulted) {
            Some((key, score)) => {
                let chosen = Chosen::Cell(key.clone());
                Ok(ScoreReport { score, chosen, consulted })
            }
            None => Ok(ScoreReport { score: self.generic.score(x)?, chosen: Chosen::Generic, consulted }),
        }
    }

    /// Scores two proteins from their own feature vectors and terms. The
    /// result does not depend on argument order.
    pub fn mesh_score(
        &self,
        (id_a, fa, terms_a): (&str, &FeatureVector, &BTreeSet<String>),
        (id_b, fb, terms_b): (&str, &FeatureVector, &BTreeSet<String>),
    ) -> Result<ScoreReport, MeshError> {
        let x = featurize_pair((id_a, fa), (id_b, fb))?;
        self.score_pair(&x.values, terms_a, terms_b)
    }

    /// Scores every candidate and sorts by score descending, ties by pair id.
    pub fn rank_predictions<F>(
        &self,
        candidates: &[PairKey],
        features: &BTreeMap<String, FeatureVector>,
        terms: F,
        threshold: f64,
    ) -> Result<Vec<Prediction>, MeshError>
    where
        F: Fn(&str) -> BTreeSet<String>,
    {
        let mut resolved: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
        for c in candidates {
            for id in [c.a.as_str(), c.b.as_str()] {
                if !resolved.contains_key(id) {
                    resolved.insert(id, terms(id));
                }
            }
        }
        let mut out = candidates
            .par_iter()
            .map(|c| {
                let missing = |id: &str| FeatureError::MissingProtein(id.to_string());
                let fa = features.get(&c.a).ok_or_else(|| missing(&c.a))?;
                let fb = features.get(&c.b).ok_or_else(|| missing(&c.b))?;
                let r = self.mesh_score((&c.a, fa, &resolved[c.a.as_str()]), (&c.b, fb, &resolved[c.b.as_str()]))?;
                Ok(Prediction {
                    key: c.clone(),
                    score: r.score,
                    chosen: r.chosen,
                    predicted: u8::from(r.score > threshold),
                })
            })
            .collect::<Result<Vec<_>, MeshError>>()?;
        out.sort_by(|x, y| y.score.total_cmp(&x.score).then_with(|| x.key.cmp(&y.key)));
        Ok(out)
    }

    /// Fails unless `requested` matches the featurizer the mesh was trained with.
    pub fn check_featurizer(&self, requested: &FeaturizerConfig) -> Result<(), MeshError> {
        if requested != &self.featurizer {
            return Err(MeshError::Format(format!(
                "mesh was trained with featurizer {:?}, requested {:?}",
                self.featurizer, requested
            )));
        }
        Ok(())
    }

    /// Writes `manifest.json`, `generic.json` and one `cells/cell_NNNN.json`
    /// per serving cell into `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), MeshError> {
        fs::create_dir_all(dir.join("cells"))?;
        let doc = |c: &TrainedClassifier| ClassifierDocument::new(self.featurizer, self.trainer.classifier, c.clone());
        let write_doc = |path: &Path, c: &TrainedClassifier| -> Result<(), MeshError> {
            let mut w = BufWriter::new(File::create(path)?);
            doc(c).write(&mut w)?;
            w.flush()?;
            Ok(())
        };
        write_doc(&dir.join("generic.json"), &self.generic)?;
        let mut entries = Vec::with_capacity(self.cells.len());
        for (i, (key, model)) in self.cells.iter().enumerate() {
            let file = format!("cells/cell_{i:04}.json");
            write_doc(&dir.join(&file), model)?;
            entries.push(CellEntry { key: key.clone(), file });
        }
        let manifest = MeshManifest {
            format: MESH_FORMAT.to_string(),
            version: MESH_FORMAT_VERSION,
            featurizer: self.featurizer,
            trainer: self.trainer,
            config: self.config,
            term_mapper: self.term_mapper.clone(),
            provenance: self.provenance.clone(),
            generic: "generic.json".to_string(),
            cells: entries,
        };
        let mut w = BufWriter::new(File::create(dir.join("manifest.json"))?);
        serde_json::to_writer_pretty(&mut w, &manifest)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, MeshError> {
        let manifest: MeshManifest = serde_json::from_reader(BufReader::new(File::open(dir.join("manifest.json"))?))?;
        if manifest.format != MESH_FORMAT {
            return Err(MeshError::Format(format!("format '{}'", manifest.format)));
        }
        if manifest.version != MESH_FORMAT_VERSION {
            return Err(MeshError::Format(format!(
                "version {} (this build reads {MESH_FORMAT_VERSION})",
                manifest.version
            )));
        }
        let read_doc = |file: &str| -> Result<TrainedClassifier, MeshError> {
            let doc = ClassifierDocument::read(BufReader::new(File::open(dir.join(file))?))?;
            if doc.featurizer != manifest.featurizer {
                return Err(MeshError::Format(format!("{file}: featurizer differs from the manifest")));
            }
            Ok(doc.classifier)
        };
        let generic = read_doc(&manifest.generic)?;
        let mut cells = BTreeMap::new();
        for e in &manifest.cells {
            cells.insert(e.key.clone(), read_doc(&e.file)?);
        }
        Ok(MeshModel {
            featurizer: manifest.featurizer,
            trainer: manifest.trainer,
            config: manifest.config,
            term_mapper: manifest.term_mapper,
            cells,
            generic,
            provenance: manifest.provenance,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CellEntry {
    key: CellKey,
    file: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct MeshManifest {
    format: String,
    version: u32,
    featurizer: FeaturizerConfig,
    trainer: Trainer,
    config: MeshConfig,
    term_mapper: TermMapper,
    provenance: Provenance,
    generic: String,
    cells: Vec<CellEntry>,
}

/// `id_a\tid_b\tscore\tchosen_cell\tpredicted_label`.
pub fn write_predictions_tsv<W: Write>(mut out: W, predictions: &[Prediction]) -> std::io::Result<()> {
    writeln!(out, "id_a\tid_b\tscore\tchosen_cell\tpredicted_label")?;
    for p in predictions {
        writeln!(out, "{}\t{}\t{}\t{}\t{}", p.key.a, p.key.b, p.score, p.chosen, p.predicted)?;
    }
    Ok(())
}
