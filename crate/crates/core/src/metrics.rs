//! ROC-AUC (Mann-Whitney form) and thresholded precision/recall.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("no scored instances")]
    Empty,
    #[error("{scores} scores but {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("label {0} is not 0 or 1")]
    InvalidLabel(u8),
    #[error("AUC needs both classes ({positives} positives, {negatives} negatives)")]
    SingleClass { positives: usize, negatives: usize },
    #[error("score at index {0} is NaN")]
    NanScore(usize),
    #[error("threshold must be finite")]
    BadThreshold,
}

/// Scores with their binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSet {
    scores: Vec<f64>,
    labels: Vec<u8>,
}

impl ScoredSet {
    pub fn new(scores: Vec<f64>, labels: Vec<u8>) -> Result<Self, MetricError> {
        if scores.len() != labels.len() {
            return Err(MetricError::LengthMismatch { scores: scores.len(), labels: labels.len() });
        }
        if scores.is_empty() {
            return Err(MetricError::Empty);
        }
        if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
            return Err(MetricError::InvalidLabel(bad));
        }
        if let Some(i) = scores.iter().position(|s| s.is_nan()) {
            return Err(MetricError::NanScore(i));
        }
        Ok(ScoredSet { scores, labels })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half. Computed from tie-averaged ranks.
pub fn roc_auc(set: &ScoredSet) -> Result<f64, MetricError> {
    let positives = set.positives();
    let negatives = set.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(MetricError::SingleClass { positives, negatives });
    }
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.sort_by(|&a, &b| set.scores[a].partial_cmp(&set.scores[b]).unwrap_or(Ordering::Equal));

    // ranks are 1-based; a tie block [start, end) shares rank (start + end + 1) / 2.
    // Work in doubled ranks so every quantity stays an integer.
    let mut doubled_rank_sum: u128 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && set.scores[order[end]] == set.scores[order[start]] {
            end += 1;
        }
        let block_positives = order[start..end].iter().filter(|&&i| set.labels[i] == 1).count() as u128;
        doubled_rank_sum += block_positives * (start + end + 1) as u128;
        start = end;
    }
    let p = positives as u128;
    // 2U = 2R - P(P+1)
    let doubled_u = doubled_rank_sum - p * (p + 1);
    Ok(doubled_u as f64 / (2 * positives * negatives) as f64)
}

/// Precision and recall with "positive" meaning `score > threshold`.
/// Precision is 1.0 when nothing is predicted positive.
pub fn precision_recall(set: &ScoredSet, threshold: f64) -> Result<(f64, f64), MetricError> {
    if !threshold.is_finite() {
        return Err(MetricError::BadThreshold);
    }
    let positives = set.positives();
    if positives == 0 || positives == set.len() {
        return Err(MetricError::SingleClass { positives, negatives: set.len() - positives });
    }
    let (mut tp, mut fp) = (0usize, 0usize);
    for (&s, &l) in set.scores.iter().zip(&set.labels) {
        if s > threshold {
            if l == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
        }
    }
    let precision = if tp + fp == 0 { 1.0 } else { tp as f64 / (tp + fp) as f64 };
    Ok((precision, tp as f64 / positives as f64))
}

/// Precision, recall and AUC for one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub auc: f64,
}

impl Metrics {
    pub fn evaluate(set: &ScoredSet, threshold: f64) -> Result<Self, MetricError> {
        let (precision, recall) = precision_recall(set, threshold)?;
        Ok(Metrics { precision, recall, auc: roc_auc(set)? })
    }

    pub fn mean(all: &[Metrics]) -> Metrics {
        let n = all.len().max(1) as f64;
        Metrics {
            precision: all.iter().map(|m| m.precision).sum::<f64>() / n,
            recall: all.iter().map(|m| m.recall).sum::<f64>() / n,
            auc: all.iter().map(|m| m.auc).sum::<f64>() / n,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(scores: &[f64], labels: &[u8]) -> ScoredSet {
        ScoredSet::new(scores.to_vec(), labels.to_vec()).unwrap()
    }

    fn pair_count(s: &ScoredSet) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &li) in s.labels().iter().enumerate() {
            for (j, &lj) in s.labels().iter().enumerate() {
                if li == 1 && lj == 0 {
                    pairs += 1.0;
                    if s.scores()[i] > s.scores()[j] {
                        wins += 1.0;
                    } else if s.scores()[i] == s.scores()[j] {
                        wins += 0.5;
                    }
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn auc_examples() {
        assert_eq!(roc_auc(&set(&[0.9, 0.1], &[1, 0])).unwrap(), 1.0);
        assert_eq!(roc_auc(&set(&[0.3; 6], &[1, 0, 1, 0, 0, 1])).unwrap(), 0.5);
        assert_eq!(roc_auc(&set(&[0.8, 0.6, 0.4, 0.2], &[1, 0, 1, 0])).unwrap(), 0.75);
        assert!(matches!(roc_auc(&set(&[0.1, 0.2], &[1, 1])), Err(MetricError::SingleClass { .. })));
    }

    #[test]
    fn scored_set_validation() {
        assert_eq!(ScoredSet::new(vec![], vec![]), Err(MetricError::Empty));
        assert!(matches!(ScoredSet::new(vec![0.1], vec![1, 0]), Err(MetricError::LengthMismatch { .. })));
        assert_eq!(ScoredSet::new(vec![0.1], vec![3]), Err(MetricError::InvalidLabel(3)));
        assert_eq!(ScoredSet::new(vec![0.1, f64::NAN], vec![1, 0]), Err(MetricError::NanScore(1)));
    }

    #[test]
    fn precision_recall_examples() {
        assert_eq!(precision_recall(&set(&[0.9, 0.8, 0.1], &[1, 1, 0]), 0.5).unwrap(), (1.0, 1.0));
        assert_eq!(precision_recall(&set(&[0.9, 0.8, 0.1], &[1, 1, 0]), 0.95).unwrap(), (1.0, 0.0));
        assert_eq!(precision_recall(&set(&[0.9, 0.7, 0.2], &[1, 0, 1]), 0.5).unwrap(), (0.5, 0.5));
        // strictly greater than the threshold
        assert_eq!(precision_recall(&set(&[0.5, 0.2], &[1, 0]), 0.5).unwrap(), (1.0, 0.0));
        assert_eq!(precision_recall(&set(&[0.5, 0.2], &[1, 0]), f64::NAN), Err(MetricError::BadThreshold));
    }

    fn arb_set() -> impl Strategy<Value = ScoredSet> {
        (2usize..120).prop_flat_map(|n| {
            (prop::collection::vec(0u8..12, n), prop::collection::vec(0u8..=1, n)).prop_filter_map(
                "needs both classes",
                |(s, mut l)| {
                    l[0] = 0;
                    l[1] = 1;
                    ScoredSet::new(s.into_iter().map(|v| f64::from(v) / 4.0).collect(), l).ok()
                },
            )
        })
    }

    proptest! {
        #[test]
        fn auc_equals_pair_counting(s in arb_set()) {
            prop_assert_eq!(roc_auc(&s).unwrap(), pair_count(&s));
        }

        #[test]
        fn complement_sums_to_one(s in arb_set()) {
            let flipped = ScoredSet::new(s.scores().to_vec(), s.labels().iter().map(|l| 1 - l).collect()).unwrap();
            prop_assert_eq!(roc_auc(&s).unwrap() + roc_auc(&flipped).unwrap(), 1.0);
        }

        #[test]
        fn invariant_under_increasing_transform(s in arb_set()) {
            let t = ScoredSet::new(s.scores().iter().map(|v| (3.0 * v).exp() - 7.0).collect(), s.labels().to_vec()).unwrap();
            prop_assert_eq!(roc_auc(&s).unwrap(), roc_auc(&t).unwrap());
        }
    }
}
