//! Soft-margin RBF support vector machine trained by sequential minimal
//! optimization.
//!
//! The dual solved is
//!
//! ```text
//! max  W(a) = sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
//! s.t. 0 <= a_i <= C,  sum_i a_i y_i = 0
//! ```
//!
//! Each step optimizes one pair analytically. The first index is the most
//! violating point of the "can move up" set, the second the point of the
//! "can move down" set that maximizes the error gap `|E_i - E_j|`. Exact
//! ties in either choice are broken with the configured seed. The solver
//! stops once the maximal violation falls to `tol`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::kernel::{rbf_unchecked, KernelRows};
use super::{check_labels, ClassifierError};

pub const DEFAULT_C: f64 = 10.0;
pub const DEFAULT_GAMMA: f64 = 0.001;
pub const DEFAULT_TOL: f64 = 1e-3;
pub const DEFAULT_MAX_ITERATIONS: usize = 10_000_000;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub c: f64,
    pub gamma: f64,
    pub tol: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: DEFAULT_C,
            gamma: DEFAULT_GAMMA,
            tol: DEFAULT_TOL,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            seed: 0,
        }
    }
}

impl SvmConfig {
    pub fn new(c: f64, gamma: f64) -> Self {
        SvmConfig { c, gamma, ..Default::default() }
    }

    fn validate(&self) -> Result<(), ClassifierError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.c) || !ok(self.gamma) || !ok(self.tol) {
            return Err(ClassifierError::InvalidConfig(format!(
                "C, gamma and tol must be positive (C={}, gamma={}, tol={})",
                self.c, self.gamma, self.tol
            )));
        }
        if self.max_iterations == 0 {
            return Err(ClassifierError::InvalidConfig("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` per support vector.
    pub dual_coefficients: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub c: f64,
    /// Final dual objective `W(alpha)`.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Training points still violating the KKT conditions by more than `tol`
    /// when the solver stopped.
    pub kkt_violations: usize,
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.support_vectors.first().map_or(0, Vec::len)
    }

    /// `sum_i (alpha_i y_i) K(sv_i, x) + b`.
    pub fn decision(&self, x: &[f64]) -> Result<f64, ClassifierError> {
        if x.len() != self.dim() {
            return Err(ClassifierError::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        let sum: f64 = self
            .support_vectors
            .iter()
            .zip(&self.dual_coefficients)
            .map(|(sv, coef)| coef * rbf_unchecked(sv, x, self.gamma))
            .sum();
        Ok(sum + self.bias)
    }

    /// Logistic squashing of the decision value into `[0, 1]`.
    pub fn score(&self, x: &[f64]) -> Result<f64, ClassifierError> {
        self.decision(x).map(logistic)
    }
}

pub fn logistic(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// Index maximizing `key` among `candidates`, exact ties broken at random.
fn pick(
    rng: &mut ChaCha8Rng,
    candidates: impl Iterator<Item = usize>,
    key: impl Fn(usize) -> f64,
) -> Option<(usize, f64)> {
    let mut best = f64::NEG_INFINITY;
    let mut ties: Vec<usize> = Vec::new();
    for t in candidates {
        let v = key(t);
        if v > best {
            best = v;
            ties.clear();
            ties.push(t);
        } else if v == best {
            ties.push(t);
        }
    }
    match ties.len() {
        0 => None,
        1 => Some((ties[0], best)),
        len => Some((ties[rng.gen_range(0..len)], best)),
    }
}

/// Dual state of one SMO run. Exposed within the crate so tests can watch
/// the objective step by step.
pub(crate) struct Smo<'a> {
    y: Vec<f64>,
    alpha: Vec<f64>,
    /// Gradient of the minimization form, `(Q alpha)_i - 1`.
    grad: Vec<f64>,
    c: f64,
    tol: f64,
    rows: KernelRows<'a>,
    rng: ChaCha8Rng,
    iterations: usize,
}

impl<'a> Smo<'a> {
    pub(crate) fn new(features: &'a [Vec<f64>], labels: &[u8], cfg: &SvmConfig) -> Self {
        let n = features.len();
        Smo {
            y: labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect(),
            alpha: vec![0.0; n],
            grad: vec![-1.0; n],
            c: cfg.c,
            tol: cfg.tol,
            rows: KernelRows::new(features, cfg.gamma),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            iterations: 0,
        }
    }

    fn in_up(&self, t: usize) -> bool {
        if self.y[t] > 0.0 {
            self.alpha[t] < self.c
        } else {
            self.alpha[t] > 0.0
        }
    }

    fn in_low(&self, t: usize) -> bool {
        if self.y[t] > 0.0 {
            self.alpha[t] > 0.0
        } else {
            self.alpha[t] < self.c
        }
    }

    /// `(m, M)`: max of `-y G` over the up set and min over the low set.
    fn violation_bounds(&self) -> (f64, f64) {
        let mut up = f64::NEG_INFINITY;
        let mut low = f64::INFINITY;
        for t in 0..self.y.len() {
            let v = -self.y[t] * self.grad[t];
            if self.in_up(t) {
                up = up.max(v);
            }
            if self.in_low(t) {
                low = low.min(v);
            }
        }
        (up, low)
    }

    /// One pair update. Returns `false` once the violation is within `tol`.
    pub(crate) fn step(&mut self) -> bool {
        let n = self.y.len();
        let (y, grad, alpha, c) = (&self.y, &self.grad, &self.alpha, self.c);
        let up = (0..n).filter(|&t| if y[t] > 0.0 { alpha[t] < c } else { alpha[t] > 0.0 });
        let Some((i, m)) = pick(&mut self.rng, up, |t| -y[t] * grad[t]) else {
            return false;
        };
        // -y G = b - E, so maximizing the gap picks the smallest -y G
        let low = (0..n).filter(|&t| if y[t] > 0.0 { alpha[t] > 0.0 } else { alpha[t] < c });
        let Some((j, neg_low)) = pick(&mut self.rng, low, |t| y[t] * grad[t]) else {
            return false;
        };
        if m + neg_low <= self.tol {
            return false;
        }
        self.update_pair(i, j);
        self.iterations += 1;
        debug_assert!(self.feasible(), "dual infeasible after step {}", self.iterations);
        true
    }

    fn update_pair(&mut self, i: usize, j: usize) {
        let c = self.c;
        let row_i = self.rows.row(i);
        let row_j = self.rows.row(j);
        let (yi, yj) = (self.y[i], self.y[j]);
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        // RBF diagonal is exactly 1
        let kij = row_i[j];
        let (mut ai, mut aj) = (old_i, old_j);
        if yi != yj {
            let quad = (2.0 - 2.0 * kij).max(TAU);
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let quad = (2.0 - 2.0 * kij).max(TAU);
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        let di = (ai - old_i) * yi;
        let dj = (aj - old_j) * yj;
        for t in 0..self.grad.len() {
            self.grad[t] += self.y[t] * (row_i[t] * di + row_j[t] * dj);
        }
    }

    fn feasible(&self) -> bool {
        let balance: f64 = self.alpha.iter().zip(&self.y).map(|(a, y)| a * y).sum();
        self.alpha.iter().all(|&a| (0.0..=self.c).contains(&a)) && balance.abs() <= 1e-8
    }

    pub(crate) fn objective(&self) -> f64 {
        0.5 * self.alpha.iter().zip(&self.grad).map(|(a, g)| a * (1.0 - g)).sum::<f64>()
    }

    fn bias(&self) -> f64 {
        let (mut sum, mut free) = (0.0, 0usize);
        for t in 0..self.y.len() {
            if self.alpha[t] > 0.0 && self.alpha[t] < self.c {
                sum += -self.y[t] * self.grad[t];
                free += 1;
            }
        }
        if free > 0 {
            sum / free as f64
        } else {
            let (m, big_m) = self.violation_bounds();
            match (m.is_finite(), big_m.is_finite()) {
                (true, true) => 0.5 * (m + big_m),
                (true, false) => m,
                (false, true) => big_m,
                (false, false) => 0.0,
            }
        }
    }

    /// Points whose margin condition is off by more than `tol` under bias `b`.
    fn count_violations(&self, b: f64) -> usize {
        (0..self.y.len())
            .filter(|&t| {
                let margin = self.grad[t] + self.y[t] * b; // y f(x) - 1
                let a = self.alpha[t];
                if a <= 0.0 {
                    margin < -self.tol
                } else if a >= self.c {
                    margin > self.tol
                } else {
                    margin.abs() > self.tol
                }
            })
            .count()
    }

    #[cfg(test)]
    pub(crate) fn alphas(&self) -> &[f64] {
        &self.alpha
    }

    pub(crate) fn run(&mut self, max_iterations: usize) -> bool {
        while self.iterations < max_iterations {
            if !self.step() {
                return true;
            }
        }
        let (m, big_m) = self.violation_bounds();
        m - big_m <= self.tol
    }

    fn into_model(self, features: &[Vec<f64>], gamma: f64, converged: bool) -> SvmModel {
        let bias = self.bias();
        let kkt_violations = self.count_violations(bias);
        let objective = self.objective();
        let mut support_vectors = Vec::new();
        let mut dual_coefficients = Vec::new();
        for (t, &a) in self.alpha.iter().enumerate() {
            if a > 0.0 {
                support_vectors.push(features[t].clone());
                dual_coefficients.push(a * self.y[t]);
            }
        }
        SvmModel {
            support_vectors,
            dual_coefficients,
            bias,
            gamma,
            c: self.c,
            objective,
            iterations: self.iterations,
            converged,
            kkt_violations,
        }
    }
}

/// Trains on labels in `{0, 1}` (mapped to `-1/+1`).
///
/// Hitting `max_iterations` is not an error: the model comes back with
/// `converged == false` and a warning is logged.
pub fn svm_train(features: &[Vec<f64>], labels: &[u8], cfg: &SvmConfig) -> Result<SvmModel, ClassifierError> {
    cfg.validate()?;
    let dim = check_labels(features, labels)?;
    if let Some(bad) = features.iter().find(|r| r.len() != dim) {
        return Err(ClassifierError::DimensionMismatch { expected: dim, found: bad.len() });
    }
    if !(labels.contains(&0) && labels.contains(&1)) {
        return Err(ClassifierError::SingleClass);
    }
    let mut smo = Smo::new(features, labels, cfg);
    let converged = smo.run(cfg.max_iterations);
    let model = smo.into_model(features, cfg.gamma, converged);
    if !converged {
        log::warn!(
            "SMO stopped after {} iterations with {} KKT violators (n={})",
            model.iterations,
            model.kkt_violations,
            features.len()
        );
    }
    Ok(model)
}
