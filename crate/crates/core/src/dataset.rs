//! Labelled interaction datasets: curated positives, known negatives and
//! random negatives drawn from the positive protein pool under a veto list.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: expected 2 id columns, found {found}")]
    Columns { line: usize, found: usize },
    #[error("line {line}: self-pair '{id}'")]
    SelfPair { line: usize, id: String },
    #[error("requested {requested} negatives but only {available} candidate pairs exist")]
    Infeasible { requested: usize, available: usize },
    #[error(
        "negative sampling gave up after {attempts} draws with {found} of {requested} pairs (pool near saturation)"
    )]
    AttemptCap { attempts: usize, found: usize, requested: usize },
    #[error("pairs reference proteins without sequences: {0:?}")]
    MissingProteins(Vec<String>),
    #[error("unbalanced dataset: {positives} positives vs {negatives} negatives")]
    Imbalance { positives: usize, negatives: usize },
    #[error("dataset line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Unordered protein pair stored with the smaller id first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PairKey {
    pub a: String,
    pub b: String,
}

impl PairKey {
    pub fn new(x: &str, y: &str) -> Self {
        if x <= y {
            PairKey { a: x.to_string(), b: y.to_string() }
        } else {
            PairKey { a: y.to_string(), b: x.to_string() }
        }
    }

    pub fn is_self(&self) -> bool {
        self.a == self.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSource {
    Curated,
    KnownNegative,
    Random,
}

impl fmt::Display for PairSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairSource::Curated => "curated",
            PairSource::KnownNegative => "known_negative",
            PairSource::Random => "random",
        })
    }
}

impl FromStr for PairSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "curated" => Ok(PairSource::Curated),
            "known_negative" => Ok(PairSource::KnownNegative),
            "random" => Ok(PairSource::Random),
            other => Err(format!("unknown pair source '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InteractionPair {
    pub key: PairKey,
    /// 1 for interacting, 0 for non-interacting.
    pub label: u8,
    pub source: PairSource,
}

impl InteractionPair {
    pub fn new(x: &str, y: &str, label: u8, source: PairSource) -> Self {
        InteractionPair { key: PairKey::new(x, y), label, source }
    }

    pub fn id_a(&self) -> &str {
        &self.key.a
    }

    pub fn id_b(&self) -> &str {
        &self.key.b
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadedPairs {
    pub pairs: Vec<InteractionPair>,
    /// Rows dropped because their canonical pair was already present.
    pub duplicates: usize,
}

/// Reads a two-column TSV of ids. A leading `id_a\tid_b` header and `#`
/// comments are skipped; rows with more than two columns (multi-protein
/// associations) are rejected.
pub fn load_pairs<R: BufRead>(
    reader: R,
    label: u8,
    source: PairSource,
    allow_self: bool,
) -> Result<LoadedPairs, DatasetError> {
    let mut seen = HashSet::new();
    let mut pairs = Vec::new();
    let mut duplicates = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
        if cols.len() != 2 || cols.iter().any(|c| c.is_empty()) {
            return Err(DatasetError::Columns { line: i + 1, found: cols.iter().filter(|c| !c.is_empty()).count() });
        }
        if i == 0 && cols == ["id_a", "id_b"] {
            continue;
        }
        let key = PairKey::new(cols[0], cols[1]);
        if key.is_self() && !allow_self {
            return Err(DatasetError::SelfPair { line: i + 1, id: key.a });
        }
        if seen.insert(key.clone()) {
            pairs.push(InteractionPair { key, label, source });
        } else {
            duplicates += 1;
        }
    }
    if pairs.is_empty() {
        log::warn!("pair file contains no pairs");
    }
    if duplicates > 0 {
        log::info!("{duplicates} duplicate pair rows collapsed");
    }
    Ok(LoadedPairs { pairs, duplicates })
}

/// Canonical pairs that random negatives may never hit.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VetoList(HashSet<PairKey>);

impl VetoList {
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = &'a InteractionPair>) -> Self {
        VetoList(pairs.into_iter().map(|p| p.key.clone()).collect())
    }

    pub fn contains(&self, key: &PairKey) -> bool {
        self.0.contains(key)
    }

    pub fn insert(&mut self, key: PairKey) -> bool {
        self.0.insert(key)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PairKey> {
        self.0.iter()
    }
}

/// Draws limit for [`sample_negatives`]: `ATTEMPTS_PER_PAIR` draws per
/// requested pair plus `ATTEMPTS_BASE`.
pub const ATTEMPTS_PER_PAIR: usize = 64;
pub const ATTEMPTS_BASE: usize = 10_000;

/// Distinct random pairs over `pool`, none in `veto`, by seeded rejection
/// sampling. The pool is sorted and deduplicated first so the result only
/// depends on its contents.
pub fn sample_negatives(
    pool: &[String],
    count: usize,
    veto: &VetoList,
    seed: u64,
) -> Result<Vec<InteractionPair>, DatasetError> {
    let ids: Vec<&str> = pool.iter().map(String::as_str).collect::<BTreeSet<_>>().into_iter().collect();
    let p = ids.len();
    let members: HashSet<&str> = ids.iter().copied().collect();
    let vetoed_in_pool = veto
        .iter()
        .filter(|k| !k.is_self() && members.contains(k.a.as_str()) && members.contains(k.b.as_str()))
        .count();
    let available = (p * p.saturating_sub(1) / 2).saturating_sub(vetoed_in_pool);
    if count > available {
        return Err(DatasetError::Infeasible { requested: count, available });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    let cap = ATTEMPTS_PER_PAIR * count + ATTEMPTS_BASE;
    let mut attempts = 0;
    while out.len() < count {
        if attempts == cap {
            return Err(DatasetError::AttemptCap { attempts, found: out.len(), requested: count });
        }
        attempts += 1;
        let i = rng.gen_range(0..p);
        let j = rng.gen_range(0..p);
        if i == j {
            continue;
        }
        let key = PairKey::new(ids[i], ids[j]);
        if veto.contains(&key) || chosen.contains(&key) {
            continue;
        }
        chosen.insert(key.clone());
        out.push(InteractionPair { key, label: 0, source: PairSource::Random });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetCounts {
    pub positives: usize,
    pub known_negatives: usize,
    pub random_negatives: usize,
    /// Known negatives dropped because they are also listed as positives.
    pub conflicting_known_negatives: usize,
}

/// Assembled, shuffled dataset plus what went into it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub pairs: Vec<InteractionPair>,
    pub counts: DatasetCounts,
    pub seed: u64,
    pub veto_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AssembleOptions {
    pub random_negatives: usize,
    pub seed: u64,
    pub allow_imbalance: bool,
}

/// Combines positives, known negatives and `random_negatives` sampled pairs.
///
/// The veto list is every positive; random negatives also avoid the known
/// negatives so no pair appears twice. When `known_ids` is given every id
/// must be in it.
pub fn assemble_dataset(
    positives: &[InteractionPair],
    known_negatives: &[InteractionPair],
    opts: &AssembleOptions,
    known_ids: Option<&HashSet<String>>,
) -> Result<Dataset, DatasetError> {
    let veto = VetoList::from_pairs(positives);
    let veto_size = veto.len();
    let mut known = Vec::with_capacity(known_negatives.len());
    let mut conflicting = 0;
    for p in known_negatives {
        if veto.contains(&p.key) {
            conflicting += 1;
        } else {
            known.push(InteractionPair { label: 0, source: PairSource::KnownNegative, key: p.key.clone() });
        }
    }
    if conflicting > 0 {
        log::warn!("{conflicting} known negatives are also positives and were dropped");
    }
    let negatives_total = known.len() + opts.random_negatives;
    if !opts.allow_imbalance && positives.len() != negatives_total {
        return Err(DatasetError::Imbalance { positives: positives.len(), negatives: negatives_total });
    }

    let mut exclusion = veto;
    for p in &known {
        exclusion.insert(p.key.clone());
    }
    let pool: Vec<String> = positives.iter().flat_map(|p| [p.key.a.clone(), p.key.b.clone()]).collect();
    let random = if opts.random_negatives > 0 {
        sample_negatives(&pool, opts.random_negatives, &exclusion, opts.seed)?
    } else {
        Vec::new()
    };

    let mut pairs: Vec<InteractionPair> = positives
        .iter()
        .map(|p| InteractionPair { label: 1, source: PairSource::Curated, key: p.key.clone() })
        .chain(known)
        .chain(random)
        .collect();

    if let Some(ids) = known_ids {
        let missing: BTreeSet<String> =
            pairs.iter().flat_map(|p| [&p.key.a, &p.key.b]).filter(|id| !ids.contains(*id)).cloned().collect();
        if !missing.is_empty() {
            return Err(DatasetError::MissingProteins(missing.into_iter().collect()));
        }
    }

    let counts = DatasetCounts {
        positives: positives.len(),
        known_negatives: known_negatives.len() - conflicting,
        random_negatives: opts.random_negatives,
        conflicting_known_negatives: conflicting,
    };
    // sort first so the shuffle does not depend on input order
    pairs.sort();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed_da7a);
    pairs.shuffle(&mut rng);
    Ok(Dataset { pairs, counts, seed: opts.seed, veto_size })
}

/// `id_a\tid_b\tlabel\tsource` with a header.
pub fn write_dataset_tsv<W: Write>(mut out: W, pairs: &[InteractionPair]) -> std::io::Result<()> {
    writeln!(out, "id_a\tid_b\tlabel\tsource")?;
    for p in pairs {
        writeln!(out, "{}\t{}\t{}\t{}", p.key.a, p.key.b, p.label, p.source)?;
    }
    Ok(())
}

pub fn read_dataset_tsv<R: BufRead>(reader: R) -> Result<Vec<InteractionPair>, DatasetError> {
    let mut pairs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || (i == 0 && line.starts_with("id_a\t")) {
            continue;
        }
        let err = |message: String| DatasetError::Parse { line: i + 1, message };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(err(format!("expected 4 columns, found {}", cols.len())));
        }
        let label = match cols[2] {
            "0" => 0,
            "1" => 1,
            other => return Err(err(format!("bad label '{other}'"))),
        };
        let source = cols[3].parse().map_err(err)?;
        pairs.push(InteractionPair::new(cols[0], cols[1], label, source));
    }
    Ok(pairs)
}
