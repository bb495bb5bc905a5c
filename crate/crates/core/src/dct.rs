//! Orthonormal DCT-II and its inverse.
//!
//! Forward, for `k = 0..N`:
//!
//! ```text
//! y[k] = w(k) * sum_n x[n] * cos(pi * (2n + 1) * k / (2N))
//! w(0) = 1/sqrt(N),  w(k) = sqrt(2/N) for k >= 1
//! ```
//!
//! and the inverse `x[n] = sum_k w(k) * y[k] * cos(pi * (2n + 1) * k / (2N))`.
//! Because the basis is orthonormal the pair is an exact round trip and
//! preserves energy.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DctError {
    #[error("cannot transform an empty signal")]
    Empty,
    #[error("signal contains a non-finite value at index {0}")]
    NonFinite(usize),
    #[error("frequency budget must be at least 1")]
    ZeroBudget,
}

/// DCT spectrum of a signal. `n_source` is the length the coefficients
/// reconstruct to; after [`truncate_or_pad`] it equals the new length.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    pub coefficients: Vec<f64>,
    pub n_source: usize,
}

impl CoefficientVector {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }
}

/// `cos(pi * m / (2N))` for `m in 0..4N`; every basis argument reduces to
/// one of these entries, so the transform needs only `4N` cosine calls.
struct CosineTable {
    n: usize,
    values: Vec<f64>,
}

impl CosineTable {
    fn new(n: usize) -> Self {
        let period = 4 * n;
        let values = (0..period).map(|m| (PI * m as f64 / (2 * n) as f64).cos()).collect();
        CosineTable { n, values }
    }

    #[inline]
    fn basis(&self, sample: usize, freq: usize) -> f64 {
        self.values[((2 * sample + 1) * freq) % (4 * self.n)]
    }
}

#[inline]
fn weight(freq: usize, n: usize) -> f64 {
    if freq == 0 {
        (1.0 / n as f64).sqrt()
    } else {
        (2.0 / n as f64).sqrt()
    }
}

fn check_finite(x: &[f64]) -> Result<(), DctError> {
    if x.is_empty() {
        return Err(DctError::Empty);
    }
    match x.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(DctError::NonFinite(i)),
        None => Ok(()),
    }
}

/// Full forward transform.
pub fn dct_forward(x: &[f64]) -> Result<CoefficientVector, DctError> {
    dct_forward_prefix(x, x.len())
}

/// The first `min(count, N)` forward coefficients, in `O(N * count)`.
///
/// Each coefficient is computed exactly as in [`dct_forward`], so the result
/// is a bit-identical prefix of the full spectrum.
pub fn dct_forward_prefix(x: &[f64], count: usize) -> Result<CoefficientVector, DctError> {
    check_finite(x)?;
    let n = x.len();
    let table = CosineTable::new(n);
    let coefficients = (0..count.min(n))
        .map(|k| {
            let sum: f64 = x.iter().enumerate().map(|(i, &v)| v * table.basis(i, k)).sum();
            weight(k, n) * sum
        })
        .collect();
    Ok(CoefficientVector { coefficients, n_source: n })
}

/// Inverse transform over `y.len()` samples.
pub fn dct_inverse(y: &CoefficientVector) -> Result<Vec<f64>, DctError> {
    let coeffs = &y.coefficients;
    check_finite(coeffs)?;
    let n = coeffs.len();
    let table = CosineTable::new(n);
    let weighted: Vec<f64> = coeffs.iter().enumerate().map(|(k, &c)| weight(k, n) * c).collect();
    Ok((0..n).map(|i| weighted.iter().enumerate().map(|(k, &c)| c * table.basis(i, k)).sum()).collect())
}

/// Keeps the first `f` coefficients or zero-pads up to `f`.
pub fn truncate_or_pad(y: &CoefficientVector, f: usize) -> Result<CoefficientVector, DctError> {
    if f == 0 {
        return Err(DctError::ZeroBudget);
    }
    let mut coefficients: Vec<f64> = y.coefficients.iter().take(f).copied().collect();
    coefficients.resize(f, 0.0);
    Ok(CoefficientVector { coefficients, n_source: f })
}
