//! Seeded synthetic corpora with planted low-frequency signal.
//!
//! Every cell is a pair of synthetic GO terms with its own sinusoidal
//! category motif. Positive pairs in a cell carry that cell's motif on both
//! proteins; a share of its negatives carry the motif of another cell on
//! both proteins, so only a classifier that knows the cell can tell them
//! apart.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{InteractionPair, PairSource};
use crate::seq::{IdentityLevel, ProteinRecord};

const GROUPS: [&[u8]; 7] = [b"AGV", b"ILFP", b"YMTS", b"HNQW", b"RK", b"DE", b"C"];

pub const SYNTHETIC_ROOT: &str = "GO:0003674";

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n_terms: usize,
    /// Cells as index pairs into the term list.
    pub cells: Vec<(usize, usize)>,
    pub pairs_per_cell: usize,
    pub positive_fraction: f64,
    /// Share of a cell's negatives that carry another cell's motif.
    pub decoy_fraction: f64,
    /// Probability that a residue follows the motif rather than background.
    pub motif_strength: f64,
    pub min_len: usize,
    pub max_len: usize,
    /// Extra pairs whose proteins have no annotation at all.
    pub unannotated_pairs: usize,
    /// Share of annotated proteins whose annotation is only reachable
    /// through a 90% identity cluster sibling.
    pub homology_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_terms: 4,
            cells: vec![(0, 1), (2, 3), (0, 3)],
            pairs_per_cell: 2000,
            positive_fraction: 0.5,
            decoy_fraction: 0.5,
            motif_strength: 0.3,
            min_len: 100,
            max_len: 400,
            unannotated_pairs: 0,
            homology_fraction: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SyntheticCorpus {
    pub records: Vec<ProteinRecord>,
    pub pairs: Vec<InteractionPair>,
    /// Cell index of each pair; `None` for unannotated pairs.
    pub pair_cells: Vec<Option<usize>>,
    /// `(protein, term)` direct annotations, leaf terms only.
    pub annotations: Vec<(String, String)>,
    /// `(level, cluster, protein)` rows.
    pub clusters: Vec<(IdentityLevel, String, String)>,
    /// `(child, parent)` ontology edges.
    pub edges: Vec<(String, String)>,
    /// Depth-one terms, one per synthetic function.
    pub terms: Vec<String>,
}

impl SyntheticCorpus {
    pub fn cell_terms(&self, cfg: &SyntheticConfig, cell: usize) -> (String, String) {
        let (m, n) = cfg.cells[cell];
        (self.terms[m].clone(), self.terms[n].clone())
    }

    pub fn labels(&self) -> Vec<u8> {
        self.pairs.iter().map(|p| p.label).collect()
    }
}

fn term_id(i: usize) -> String {
    format!("GO:99{:05}", 10 * (i + 1))
}

fn leaf_id(i: usize) -> String {
    format!("GO:99{:05}", 10 * (i + 1) + 1)
}

struct Generator {
    rng: ChaCha8Rng,
    min_len: usize,
    max_len: usize,
    strength: f64,
    next_id: usize,
}

impl Generator {
    fn id(&mut self) -> String {
        self.next_id += 1;
        format!("SYN{:05}", self.next_id)
    }

    /// Sequence following motif `motif` (cycles, phase) or pure background.
    fn sequence(&mut self, motif: Option<(f64, f64)>) -> String {
        let len = self.rng.gen_range(self.min_len..=self.max_len);
        let mut out = String::with_capacity(len);
        for t in 0..len {
            let category = match motif {
                Some((cycles, phase)) if self.rng.gen_bool(self.strength) => {
                    let v = 4.0 + 3.0 * (2.0 * PI * cycles * (t as f64 + 0.5) / len as f64 + phase).sin();
                    v.round().clamp(1.0, 7.0) as usize
                }
                _ => self.rng.gen_range(1..=7),
            };
            let group = GROUPS[category - 1];
            out.push(group[self.rng.gen_range(0..group.len())] as char);
        }
        out
    }
}

fn motif_of(cell: usize) -> (f64, f64) {
    (3.0 + cell as f64, cell as f64 * PI / 3.0)
}

/// Generates the corpus described by `cfg`. Identical configs give
/// identical corpora.
pub fn generate(cfg: &SyntheticConfig) -> SyntheticCorpus {
    let mut gen = Generator {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        min_len: cfg.min_len,
        max_len: cfg.max_len.max(cfg.min_len),
        strength: cfg.motif_strength,
        next_id: 0,
    };
    let mut corpus = SyntheticCorpus::default();
    for i in 0..cfg.n_terms {
        corpus.edges.push((term_id(i), SYNTHETIC_ROOT.to_string()));
        corpus.edges.push((leaf_id(i), term_id(i)));
        corpus.terms.push(term_id(i));
    }

    let n_cells = cfg.cells.len();
    let mut annotated: Vec<(String, usize)> = Vec::new();
    for (c, &(m, n)) in cfg.cells.iter().enumerate() {
        let n_pos = (cfg.pairs_per_cell as f64 * cfg.positive_fraction).round() as usize;
        for k in 0..cfg.pairs_per_cell {
            let label = u8::from(k < n_pos);
            let motif = if label == 1 {
                Some(motif_of(c))
            } else if n_cells > 1 && gen.rng.gen_bool(cfg.decoy_fraction) {
                let mut other = gen.rng.gen_range(0..n_cells - 1);
                if other >= c {
                    other += 1;
                }
                Some(motif_of(other))
            } else {
                None
            };
            let (a, b) = (gen.id(), gen.id());
            for (id, term) in [(&a, m), (&b, n)] {
                let seq = gen.sequence(motif);
                corpus.records.push(record(id, seq));
                annotated.push((id.clone(), term));
            }
            corpus.pairs.push(pair(&a, &b, label));
            corpus.pair_cells.push(Some(c));
        }
    }
    for k in 0..cfg.unannotated_pairs {
        let label = u8::from(k % 2 == 0);
        let motif = (label == 1 && n_cells > 0).then(|| motif_of(gen.rng.gen_range(0..n_cells)));
        let (a, b) = (gen.id(), gen.id());
        for id in [&a, &b] {
            let seq = gen.sequence(motif);
            corpus.records.push(record(id, seq));
        }
        corpus.pairs.push(pair(&a, &b, label));
        corpus.pair_cells.push(None);
    }

    let mut donors = 0usize;
    for (id, term) in annotated {
        if cfg.homology_fraction > 0.0 && gen.rng.gen_bool(cfg.homology_fraction) {
            donors += 1;
            let donor = format!("SYND{donors:05}");
            let cluster = format!("UniRef90_{donor}");
            corpus.annotations.push((donor.clone(), leaf_id(term)));
            corpus.clusters.push((IdentityLevel::Id90, cluster.clone(), id));
            corpus.clusters.push((IdentityLevel::Id90, cluster, donor));
        } else {
            corpus.annotations.push((id, leaf_id(term)));
        }
    }

    // keep label blocks from lining up with file order
    let mut order: Vec<usize> = (0..corpus.pairs.len()).collect();
    order.shuffle(&mut gen.rng);
    corpus.pairs = order.iter().map(|&i| corpus.pairs[i].clone()).collect();
    corpus.pair_cells = order.iter().map(|&i| corpus.pair_cells[i]).collect();
    corpus
}

fn record(id: &str, sequence: String) -> ProteinRecord {
    ProteinRecord { id: id.to_string(), sequence, go_terms: BTreeSet::new(), cluster_ids: Default::default() }
}

fn pair(a: &str, b: &str, label: u8) -> InteractionPair {
    let source = if label == 1 { PairSource::Curated } else { PairSource::KnownNegative };
    InteractionPair::new(a, b, label, source)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seq::{encode_sequence, AlphabetMode};

    fn small() -> SyntheticConfig {
        SyntheticConfig { pairs_per_cell: 20, unannotated_pairs: 6, homology_fraction: 0.2, ..Default::default() }
    }

    #[test]
    fn shape_and_determinism() {
        let cfg = small();
        let a = generate(&cfg);
        assert_eq!(a, generate(&cfg));
        assert_eq!(a.pairs.len(), 66);
        assert_eq!(a.records.len(), 132);
        assert_eq!(a.pairs.iter().filter(|p| p.label == 1).count(), 33);
        for r in &a.records {
            assert!((100..=400).contains(&r.sequence.len()));
            encode_sequence(&r.id, &r.sequence, AlphabetMode::Strict).unwrap();
        }
        assert!(!a.clusters.is_empty());
        assert_ne!(a, generate(&SyntheticConfig { seed: 1, ..cfg }));
    }

    #[test]
    fn motif_raises_low_frequency_energy() {
        let mut gen =
            Generator { rng: ChaCha8Rng::seed_from_u64(0), min_len: 200, max_len: 200, strength: 0.6, next_id: 0 };
        let energy = |s: &str| {
            let x = encode_sequence("p", s, AlphabetMode::Strict).unwrap().to_f64();
            let y = crate::dct::dct_forward(&x).unwrap();
            y.coefficients[1..20].iter().map(|v| v * v).sum::<f64>()
        };
        let planted = gen.sequence(Some(motif_of(0)));
        let background = gen.sequence(None);
        assert!(energy(&planted) > 3.0 * energy(&background));
    }
}
