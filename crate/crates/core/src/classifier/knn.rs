use serde::{Deserialize, Serialize};

use super::kernel::squared_distance;
use super::{check_labels, ClassifierError};

pub const DEFAULT_K: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k: usize,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig { k: DEFAULT_K }
    }
}

/// Lazy learner: the training set is stored as given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub k: usize,
}

pub fn knn_train(features: &[Vec<f64>], labels: &[u8], cfg: &KnnConfig) -> Result<KnnModel, ClassifierError> {
    let dim = check_labels(features, labels)?;
    if cfg.k == 0 {
        return Err(ClassifierError::InvalidConfig("k must be at least 1".into()));
    }
    if cfg.k > features.len() {
        return Err(ClassifierError::TooFewRows { k: cfg.k, n: features.len() });
    }
    if let Some(bad) = features.iter().find(|r| r.len() != dim) {
        return Err(ClassifierError::DimensionMismatch { expected: dim, found: bad.len() });
    }
    Ok(KnnModel { features: features.to_vec(), labels: labels.to_vec(), k: cfg.k })
}

impl KnnModel {
    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    /// Positive fraction among the `k` nearest rows. Every row tied with the
    /// k-th distance is included.
    pub fn score(&self, x: &[f64]) -> Result<f64, ClassifierError> {
        if x.len() != self.dim() {
            return Err(ClassifierError::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        let dists: Vec<f64> = self.features.iter().map(|r| squared_distance(r, x)).collect();
        let mut scratch = dists.clone();
        let (_, kth, _) = scratch.select_nth_unstable_by(self.k - 1, f64::total_cmp);
        let cutoff = *kth;
        let (mut hits, mut total) = (0usize, 0usize);
        for (d, &label) in dists.iter().zip(&self.labels) {
            if *d <= cutoff {
                total += 1;
                hits += usize::from(label);
            }
        }
        Ok(hits as f64 / total as f64)
    }
}

/// Hard call from a kNN score: exactly 0.5 counts as negative.
pub fn knn_predict(score: f64) -> u8 {
    u8::from(score > 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> (Vec<Vec<f64>>, Vec<u8>) {
        let rows = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![5.0, 5.0], vec![6.0, 5.0]];
        (rows, vec![1, 1, 0, 0, 0])
    }

    #[test]
    fn training_keeps_rows() {
        let (rows, labels) = grid();
        let m = knn_train(&rows, &labels, &KnnConfig { k: 5 }).unwrap();
        assert_eq!(m.features.len(), 5);
        assert!(matches!(knn_train(&rows, &labels, &KnnConfig { k: 6 }), Err(ClassifierError::TooFewRows { .. })));
        assert!(knn_train(&[], &[], &KnnConfig { k: 1 }).is_err());
        let dup = vec![vec![1.0], vec![1.0], vec![1.0]];
        assert_eq!(knn_train(&dup, &[1, 0, 1], &KnnConfig { k: 2 }).unwrap().features.len(), 3);
    }

    #[test]
    fn self_retrieval_with_k1() {
        let (rows, labels) = grid();
        let m = knn_train(&rows, &labels, &KnnConfig { k: 1 }).unwrap();
        for (r, &l) in rows.iter().zip(&labels) {
            assert_eq!(m.score(r).unwrap(), f64::from(l));
        }
    }

    #[test]
    fn fraction_of_three() {
        let rows = vec![vec![0.0], vec![1.0], vec![2.5], vec![10.0]];
        let m = knn_train(&rows, &[1, 1, 0, 1], &KnnConfig { k: 3 }).unwrap();
        assert!((m.score(&[0.5]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ties_at_kth_distance_are_all_counted() {
        // query at origin, k=2: one point at distance 1, three tied at distance 2
        let rows = vec![vec![1.0, 0.0], vec![2.0, 0.0], vec![0.0, 2.0], vec![-2.0, 0.0]];
        let m = knn_train(&rows, &[1, 1, 0, 0], &KnnConfig { k: 2 }).unwrap();
        assert_eq!(m.score(&[0.0, 0.0]).unwrap(), 0.5);
    }

    #[test]
    fn k_equals_n_is_base_rate() {
        let (rows, labels) = grid();
        let m = knn_train(&rows, &labels, &KnnConfig { k: 5 }).unwrap();
        for q in [[0.0, 0.0], [100.0, -3.0]] {
            assert_eq!(m.score(&q).unwrap(), 0.4);
        }
    }

    #[test]
    fn even_k_threshold() {
        assert_eq!(knn_predict(0.5), 0);
        assert_eq!(knn_predict(0.75), 1);
    }

    #[test]
    fn dimension_mismatch() {
        let (rows, labels) = grid();
        let m = knn_train(&rows, &labels, &KnnConfig { k: 1 }).unwrap();
        assert!(matches!(m.score(&[1.0]), Err(ClassifierError::DimensionMismatch { .. })));
    }
}
