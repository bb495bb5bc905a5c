//! Fixed-length protein and pair features.
//!
//! A protein's category signal is transformed, its spectrum cut (or
//! zero-padded) to `f` coefficients and reconstructed over `f` samples, so
//! every protein maps to exactly `f` values whatever its length. Pairs
//! concatenate the two protein vectors with the lexicographically smaller
//! id first.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dct::{self, DctError};
use crate::seq::{encode_sequence, AlphabetMode, CategorySignal, ProteinRecord, SeqError};

pub const DEFAULT_FREQUENCIES: usize = 300;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error(transparent)]
    Dct(#[from] DctError),
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error("feature length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("no sequence for protein '{0}'")]
    MissingProtein(String),
    #[error("feature table line {line}: {message}")]
    Table { line: usize, message: String },
    #[error("unknown normalization '{0}'")]
    UnknownNormalization(String),
    #[error("cannot fit normalization on zero rows")]
    EmptyFit,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Z-score every feature position with statistics fitted on training rows.
    #[default]
    ZScorePerPosition,
    /// Z-score each reconstructed protein signal against its own mean and spread.
    ZScorePerSignal,
    None,
}

impl FromStr for Normalization {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "z_score_per_position" | "per-position" | "position" => Ok(Normalization::ZScorePerPosition),
            "z_score_per_signal" | "per-signal" | "signal" => Ok(Normalization::ZScorePerSignal),
            "none" => Ok(Normalization::None),
            other => Err(FeatureError::UnknownNormalization(other.to_string())),
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::ZScorePerPosition => "z_score_per_position",
            Normalization::ZScorePerSignal => "z_score_per_signal",
            Normalization::None => "none",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeaturizerConfig {
    /// Frequency budget per protein; pairs carry `2 * f` features.
    pub f: usize,
    pub normalization: Normalization,
    #[serde(default)]
    pub alphabet: AlphabetMode,
}

impl Default for FeaturizerConfig {
    fn default() -> Self {
        FeaturizerConfig {
            f: DEFAULT_FREQUENCIES,
            normalization: Normalization::default(),
            alphabet: AlphabetMode::Strict,
        }
    }
}

impl FeaturizerConfig {
    pub fn with_f(f: usize) -> Self {
        FeaturizerConfig { f, ..Default::default() }
    }

    pub fn pair_dim(&self) -> usize {
        2 * self.f
    }
}

/// Per-protein (`f` values) or per-pair (`2f` values) features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    /// Frequency budget the vector was built with.
    pub f: usize,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Forward transform, cut/pad to `cfg.f`, reconstruct over `cfg.f` samples.
/// Per-signal z-scoring is applied here; per-position z-scoring needs fitted
/// statistics and happens in [`Standardizer`].
pub fn featurize_protein(signal: &CategorySignal, cfg: &FeaturizerConfig) -> Result<FeatureVector, FeatureError> {
    if cfg.f == 0 {
        return Err(DctError::ZeroBudget.into());
    }
    let spectrum = dct::dct_forward_prefix(&signal.to_f64(), cfg.f)?;
    let kept = dct::truncate_or_pad(&spectrum, cfg.f)?;
    let mut values = dct::dct_inverse(&kept)?;
    if cfg.normalization == Normalization::ZScorePerSignal {
        zscore_in_place(&mut values);
    }
    Ok(FeatureVector { values, f: cfg.f })
}

fn zscore_in_place(values: &mut [f64]) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    if sd > 0.0 && sd.is_finite() {
        values.iter_mut().for_each(|v| *v = (*v - mean) / sd);
    } else {
        values.iter_mut().for_each(|v| *v -= mean);
    }
}

/// Concatenates two protein vectors, smaller id first.
pub fn featurize_pair(
    (id_a, a): (&str, &FeatureVector),
    (id_b, b): (&str, &FeatureVector),
) -> Result<FeatureVector, FeatureError> {
    if a.len() != b.len() {
        return Err(FeatureError::LengthMismatch { left: a.len(), right: b.len() });
    }
    let (first, second) = if id_a <= id_b { (a, b) } else { (b, a) };
    let mut values = Vec::with_capacity(2 * first.len());
    values.extend_from_slice(&first.values);
    values.extend_from_slice(&second.values);
    Ok(FeatureVector { values, f: a.f })
}

/// Featurizes every record, in parallel.
pub fn featurize_corpus(
    records: &[ProteinRecord],
    cfg: &FeaturizerConfig,
) -> Result<BTreeMap<String, FeatureVector>, FeatureError> {
    records
        .par_iter()
        .map(|rec| {
            let signal = encode_sequence(&rec.id, &rec.sequence, cfg.alphabet)?;
            Ok((rec.id.clone(), featurize_protein(&signal, cfg)?))
        })
        .collect()
}

/// Looks up both proteins and builds the canonical pair vector.
pub fn pair_from_map(
    features: &BTreeMap<String, FeatureVector>,
    id_a: &str,
    id_b: &str,
) -> Result<FeatureVector, FeatureError> {
    let a = features.get(id_a).ok_or_else(|| FeatureError::MissingProtein(id_a.to_string()))?;
    let b = features.get(id_b).ok_or_else(|| FeatureError::MissingProtein(id_b.to_string()))?;
    featurize_pair((id_a, a), (id_b, b))
}

/// Per-position mean/scale fitted on training rows.
///
/// Positions with zero variance keep mean 0 and scale 1 so they pass
/// through unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self, FeatureError> {
        let first = rows.first().ok_or(FeatureError::EmptyFit)?;
        let dim = first.len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for row in rows {
            if row.len() != dim {
                return Err(FeatureError::LengthMismatch { left: dim, right: row.len() });
            }
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for row in rows {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let mut scale = Vec::with_capacity(dim);
        for (i, s) in var.into_iter().enumerate() {
            let sd = (s / n).sqrt();
            if sd > 1e-12 * mean[i].abs().max(1.0) {
                scale.push(sd);
            } else {
                mean[i] = 0.0;
                scale.push(1.0);
            }
        }
        Ok(Standardizer { mean, scale })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect()
    }

    pub fn transform_all(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.transform(r)).collect()
    }
}

/// One labelled pair row of a feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub id_a: String,
    pub id_b: String,
    pub label: u8,
    pub values: Vec<f64>,
}

/// Writes `id_a, id_b, label, f1..fD` with a header line.
pub fn write_feature_tsv<W: Write>(mut out: W, rows: &[FeatureRow]) -> std::io::Result<()> {
    let dim = rows.first().map_or(0, |r| r.values.len());
    write!(out, "id_a\tid_b\tlabel")?;
    for i in 1..=dim {
        write!(out, "\tf{i}")?;
    }
    writeln!(out)?;
    for row in rows {
        write!(out, "{}\t{}\t{}", row.id_a, row.id_b, row.label)?;
        for v in &row.values {
            write!(out, "\t{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn read_feature_tsv<R: BufRead>(reader: R) -> Result<Vec<FeatureRow>, FeatureError> {
    let mut rows = Vec::new();
    let mut dim = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if i == 0 && line.starts_with("id_a\t") || line.trim().is_empty() {
            continue;
        }
        let err = |message: String| FeatureError::Table { line: lineno, message };
        let mut fields = line.split('\t');
        let id_a = fields.next().ok_or_else(|| err("missing id_a".into()))?.to_string();
        let id_b = fields.next().ok_or_else(|| err("missing id_b".into()))?.to_string();
        let label: u8 = fields
            .next()
            .ok_or_else(|| err("missing label".into()))?
            .parse()
            .map_err(|e| err(format!("bad label: {e}")))?;
        if label > 1 {
            return Err(err(format!("label {label} is not 0 or 1")));
        }
        let values = fields
            .map(|f| f.parse::<f64>().map_err(|e| err(format!("bad value '{f}': {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => return Err(err(format!("expected {d} values, found {}", values.len()))),
            _ => {}
        }
        rows.push(FeatureRow { id_a, id_b, label, values });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn raw(f: usize) -> FeaturizerConfig {
        FeaturizerConfig { f, normalization: Normalization::None, alphabet: AlphabetMode::Strict }
    }

    fn signal(v: &[u8]) -> CategorySignal {
        CategorySignal::new(v.to_vec()).unwrap()
    }

    #[test]
    fn constant_signal_survives_truncation() {
        let out = featurize_protein(&signal(&[3, 3, 3, 3]), &raw(4)).unwrap();
        assert!(out.values.iter().all(|v| (v - 3.0).abs() < 1e-12));
    }

    #[test]
    fn equal_length_is_lossless() {
        let s = signal(&[1, 5, 2, 7, 7, 3, 6, 4, 1]);
        let out = featurize_protein(&s, &raw(9)).unwrap();
        for (a, b) in out.values.iter().zip(s.to_f64()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    // naive oracle: sum the basis directly, 1-based indices
    fn oracle_pipeline(x: &[f64], f: usize) -> Vec<f64> {
        let n = x.len();
        let w = |k: usize, n: usize| if k == 1 { 1.0 / (n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
        let mut y = vec![0.0; f];
        for k in 1..=f.min(n) {
            let mut s = 0.0;
            for i in 1..=n {
                s += x[i - 1] * (std::f64::consts::PI / (2.0 * n as f64) * (2 * i - 1) as f64 * (k - 1) as f64).cos();
            }
            y[k - 1] = w(k, n) * s;
        }
        (1..=f)
            .map(|i| {
                (1..=f)
                    .map(|k| {
                        w(k, f)
                            * y[k - 1]
                            * (std::f64::consts::PI * ((2 * i - 1) * (k - 1)) as f64 / (2.0 * f as f64)).cos()
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn truncated_pipeline_matches_oracle() {
        let s = signal(&[1, 2, 3, 4, 5, 6, 7, 1, 2, 3]);
        let out = featurize_protein(&s, &raw(4)).unwrap();
        let expected = oracle_pipeline(&s.to_f64(), 4);
        for (a, b) in out.values.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        let padded = featurize_protein(&s, &raw(16)).unwrap();
        let expected = oracle_pipeline(&s.to_f64(), 16);
        for (a, b) in padded.values.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn per_signal_normalization() {
        let cfg = FeaturizerConfig { normalization: Normalization::ZScorePerSignal, ..raw(8) };
        let out = featurize_protein(&signal(&[1, 7, 2, 6, 3, 5, 4, 4, 1, 2]), &cfg).unwrap();
        let mean: f64 = out.values.iter().sum::<f64>() / 8.0;
        let var: f64 = out.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 8.0;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pair_concatenation_is_canonical() {
        let a = FeatureVector { values: vec![1.0, 2.0], f: 2 };
        let b = FeatureVector { values: vec![3.0, 4.0], f: 2 };
        let ab = featurize_pair(("A", &a), ("B", &b)).unwrap();
        assert_eq!(ab.values, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(featurize_pair(("B", &b), ("A", &a)).unwrap(), ab);
        let c = FeatureVector { values: vec![1.0, 2.0, 3.0], f: 3 };
        assert!(matches!(
            featurize_pair(("A", &a), ("C", &c)),
            Err(FeatureError::LengthMismatch { left: 2, right: 3 })
        ));
    }

    #[test]
    fn standardizer_fits_training_rows() {
        let rows = vec![vec![1.0, 5.0, 2.0], vec![3.0, 5.0, 4.0], vec![5.0, 5.0, 9.0]];
        let st = Standardizer::fit(&rows).unwrap();
        let t = st.transform_all(&rows);
        for col in [0, 2] {
            let m: f64 = t.iter().map(|r| r[col]).sum::<f64>() / 3.0;
            let v: f64 = t.iter().map(|r| (r[col] - m).powi(2)).sum::<f64>() / 3.0;
            assert!(m.abs() < 1e-12 && (v - 1.0).abs() < 1e-12);
        }
        // constant column passes through untouched
        assert!(t.iter().all(|r| r[1] == 5.0));
        assert!(matches!(Standardizer::fit(&[]), Err(FeatureError::EmptyFit)));
    }

    #[test]
    fn feature_tsv_round_trip() {
        let rows = vec![
            FeatureRow { id_a: "A".into(), id_b: "B".into(), label: 1, values: vec![0.1, -2.5e-7, 3.0, 1.0 / 3.0] },
            FeatureRow { id_a: "A".into(), id_b: "C".into(), label: 0, values: vec![1e300, 0.0, -0.0, 7.25] },
        ];
        let mut buf = Vec::new();
        write_feature_tsv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("id_a\tid_b\tlabel\tf1\tf2\tf3\tf4\n"));
        assert_eq!(read_feature_tsv(buf.as_slice()).unwrap(), rows);
        assert!(read_feature_tsv("A\tB\t1\t0.5\nA\tC\t0\n".as_bytes()).is_err());
        assert!(read_feature_tsv("A\tB\t2\t0.5\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn output_length_is_budget(len in 1usize..400, f in 1usize..64, seed in any::<u64>()) {
            let values: Vec<u8> = (0..len).map(|i| ((seed.wrapping_add(i as u64 * 2654435761) >> 7) % 7 + 1) as u8).collect();
            let s = signal(&values);
            for n in [1, f.saturating_sub(1).max(1), f, f + 1, 10 * f] {
                let sig = signal(&values.iter().cycle().take(n).copied().collect::<Vec<_>>());
                let out = featurize_protein(&sig, &FeaturizerConfig::with_f(f)).unwrap();
                prop_assert_eq!(out.len(), f);
                prop_assert!(out.values.iter().all(|v| v.is_finite()));
            }
            let out = featurize_protein(&s, &raw(f)).unwrap();
            prop_assert_eq!(out.len(), f);
        }

        #[test]
        fn reconstruction_error_non_increasing_in_budget(x in prop::collection::vec(-5.0f64..5.0, 2..48)) {
            let y = dct::dct_forward(&x).unwrap();
            let n = x.len();
            let mut prev = f64::INFINITY;
            for f in 1..=n {
                // keep f coefficients, reconstruct at the original length
                let mut kept = y.coefficients.clone();
                kept[f..].iter_mut().for_each(|c| *c = 0.0);
                let rec = dct::dct_inverse(&dct::CoefficientVector { coefficients: kept, n_source: n }).unwrap();
                let err: f64 = x.iter().zip(&rec).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                prop_assert!(err <= prev + 1e-9);
                prev = err;
            }
        }
    }
}
