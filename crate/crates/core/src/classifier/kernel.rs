use std::sync::Arc;

use super::ClassifierError;

/// `exp(-gamma * |x - z|^2)`.
pub fn rbf_kernel(x: &[f64], z: &[f64], gamma: f64) -> Result<f64, ClassifierError> {
    if x.len() != z.len() {
        return Err(ClassifierError::DimensionMismatch { expected: x.len(), found: z.len() });
    }
    Ok(rbf_unchecked(x, z, gamma))
}

#[inline]
pub(crate) fn squared_distance(x: &[f64], z: &[f64]) -> f64 {
    x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum()
}

#[inline]
pub(crate) fn rbf_unchecked(x: &[f64], z: &[f64], gamma: f64) -> f64 {
    (-gamma * squared_distance(x, z)).exp()
}

/// Rows of the RBF Gram matrix over a fixed training set.
///
/// Up to `CACHE_LIMIT` points every requested row is kept; above that rows
/// are recomputed on each request.
pub(crate) struct KernelRows<'a> {
    points: &'a [Vec<f64>],
    gamma: f64,
    cache: Option<Vec<Option<Arc<[f64]>>>>,
}

pub(crate) const CACHE_LIMIT: usize = 10_000;

impl<'a> KernelRows<'a> {
    pub(crate) fn new(points: &'a [Vec<f64>], gamma: f64) -> Self {
        let cache = (points.len() <= CACHE_LIMIT).then(|| vec![None; points.len()]);
        KernelRows { points, gamma, cache }
    }

    fn compute(&self, i: usize) -> Arc<[f64]> {
        let xi = &self.points[i];
        self.points.iter().map(|xj| rbf_unchecked(xi, xj, self.gamma)).collect()
    }

    pub(crate) fn row(&mut self, i: usize) -> Arc<[f64]> {
        if self.cache.is_none() {
            return self.compute(i);
        }
        if let Some(row) = self.cache.as_ref().and_then(|c| c[i].clone()) {
            return row;
        }
        let row = self.compute(i);
        if let Some(cache) = self.cache.as_mut() {
            cache[i] = Some(row.clone());
        }
        row
    }
}
