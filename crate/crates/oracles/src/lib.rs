//! Direct, slow reference implementations. Each one follows the textbook
//! definition as literally as possible so the optimized code in
//! `ppimesh` can be checked against it.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

fn weight(k: usize, n: usize) -> f64 {
    if k == 1 {
        (1.0 / n as f64).sqrt()
    } else {
        (2.0 / n as f64).sqrt()
    }
}

/// Orthonormal DCT-II by direct summation, 1-based indices.
pub fn dct_forward(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut y = vec![0.0; n];
    for k in 1..=n {
        let mut s = 0.0;
        for i in 1..=n {
            s += x[i - 1] * (PI * (2 * i - 1) as f64 * (k - 1) as f64 / (2 * n) as f64).cos();
        }
        y[k - 1] = weight(k, n) * s;
    }
    y
}

/// Inverse of [`dct_forward`] by direct summation.
pub fn dct_inverse(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut x = vec![0.0; n];
    for i in 1..=n {
        let mut s = 0.0;
        for k in 1..=n {
            s += weight(k, n) * y[k - 1] * (PI * (2 * i - 1) as f64 * (k - 1) as f64 / (2 * n) as f64).cos();
        }
        x[i - 1] = s;
    }
    x
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    s
}

pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    (-gamma * sq_dist(a, b)).exp()
}

/// Fraction of positives among the `k` nearest training points, with every
/// point tied at the k-th distance included. Uses a full sort.
pub fn knn_score(train: &[Vec<f64>], labels: &[u8], k: usize, x: &[f64]) -> f64 {
    let mut d: Vec<(f64, u8)> = train.iter().zip(labels).map(|(t, &l)| (sq_dist(t, x), l)).collect();
    d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let cutoff = d[k - 1].0;
    let inside: Vec<u8> = d.iter().filter(|(dist, _)| *dist <= cutoff).map(|&(_, l)| l).collect();
    let pos = inside.iter().filter(|&&l| l == 1).count();
    pos as f64 / inside.len() as f64
}

/// AUC by comparing every positive with every negative; ties count one half.
pub fn auc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut twice_wins: u128 = 0;
    let mut pairs: u128 = 0;
    for i in 0..scores.len() {
        if labels[i] != 1 {
            continue;
        }
        for j in 0..scores.len() {
            if labels[j] != 0 {
                continue;
            }
            pairs += 1;
            if scores[i] > scores[j] {
                twice_wins += 2;
            } else if scores[i] == scores[j] {
                twice_wins += 1;
            }
        }
    }
    twice_wins as f64 / (2 * pairs) as f64
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub alpha: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

/// `sum(alpha) - 1/2 alpha' Q alpha` with `Q_ij = y_i y_j K(x_i, x_j)`.
pub fn dual_objective(points: &[Vec<f64>], labels: &[u8], alpha: &[f64], gamma: f64) -> f64 {
    let y: Vec<f64> = labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let mut lin = 0.0;
    let mut quad = 0.0;
    for i in 0..points.len() {
        lin += alpha[i];
        for j in 0..points.len() {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * rbf(&points[i], &points[j], gamma);
        }
    }
    lin - 0.5 * quad
}

/// Euclidean projection onto `{0 <= a <= c, y'a = 0}` by bisection on the
/// multiplier of the equality constraint.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |lambda: f64| -> Vec<f64> { v.iter().zip(y).map(|(vi, yi)| (vi - lambda * yi).clamp(0.0, c)).collect() };
    let h = |a: &[f64]| -> f64 { a.iter().zip(y).map(|(ai, yi)| ai * yi).sum() };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &vi in v {
        lo = lo.min((vi - c).min(-vi));
        hi = hi.max(vi.max(c - vi));
    }
    lo -= 1.0;
    hi += 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(&at(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Solves the soft-margin RBF SVM dual with accelerated projected gradient
/// (FISTA with adaptive restart) on the dense Gram matrix.
pub fn svm_dual(points: &[Vec<f64>], labels: &[u8], c: f64, gamma: f64) -> QpSolution {
    let n = points.len();
    let y: Vec<f64> = labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let mut q = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            q[i][j] = y[i] * y[j] * rbf(&points[i], &points[j], gamma);
        }
    }
    let matvec = |a: &[f64]| -> Vec<f64> { q.iter().map(|row| row.iter().zip(a).map(|(r, x)| r * x).sum()).collect() };

    let mut v = vec![1.0; n];
    let mut lmax = 0.0;
    for _ in 0..500 {
        let w = matvec(&v);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        lmax = norm / v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.iter().map(|x| x / norm).collect();
    }
    let step = 1.0 / (1.05 * lmax + 1e-12);

    let grad = |a: &[f64]| -> Vec<f64> { matvec(a).iter().map(|g| g - 1.0).collect() };
    let mut alpha = vec![0.0; n];
    let mut z = alpha.clone();
    let mut t: f64 = 1.0;
    let max_iterations = 2_000_000;
    let mut it = 0;
    while it < max_iterations {
        it += 1;
        let g = grad(&z);
        let cand: Vec<f64> = z.iter().zip(&g).map(|(zi, gi)| zi - step * gi).collect();
        let next = project(&cand, &y, c);
        let restart: f64 = z.iter().zip(&next).zip(&alpha).map(|((zi, ni), ai)| (zi - ni) * (ni - ai)).sum();
        let t_next = if restart > 0.0 { 1.0 } else { 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt()) };
        let momentum = if restart > 0.0 { 0.0 } else { (t - 1.0) / t_next };
        z = next.iter().zip(&alpha).map(|(ni, ai)| ni + momentum * (ni - ai)).collect();
        alpha = next;
        t = t_next;
        if it % 200 == 0 {
            let g = grad(&alpha);
            let probe: Vec<f64> = alpha.iter().zip(&g).map(|(ai, gi)| ai - step * gi).collect();
            let p = project(&probe, &y, c);
            let resid = p.iter().zip(&alpha).map(|(pi, ai)| (pi - ai).abs()).fold(0.0, f64::max);
            if resid < 1e-13 * c.max(1.0) {
                break;
            }
        }
    }
    let objective = dual_objective(points, labels, &alpha, gamma);
    QpSolution { alpha, objective, iterations: it }
}

/// Shortest distance from `root` by repeated edge relaxation.
pub fn depths(edges: &[(String, String)], root: &str) -> BTreeMap<String, usize> {
    let mut d = BTreeMap::from([(root.to_string(), 0usize)]);
    loop {
        let mut changed = false;
        for (child, parent) in edges {
            if let Some(&dp) = d.get(parent) {
                let better = d.get(child).is_none_or(|&dc| dp + 1 < dc);
                if better {
                    d.insert(child.clone(), dp + 1);
                    changed = true;
                }
            }
        }
        if !changed {
            return d;
        }
    }
}

/// `term` and everything reachable by following parent links.
pub fn ancestors(edges: &[(String, String)], term: &str) -> BTreeSet<String> {
    let mut seen = BTreeSet::from([term.to_string()]);
    let mut stack = vec![term.to_string()];
    while let Some(t) = stack.pop() {
        for (child, parent) in edges {
            if *child == t && seen.insert(parent.clone()) {
                stack.push(parent.clone());
            }
        }
    }
    seen
}

/// Terms at depth 1..=max_depth annotating at least `min_proteins`
/// proteins once every annotation is copied to all ancestors.
pub fn select_terms(
    edges: &[(String, String)],
    root: &str,
    annotations: &BTreeMap<String, BTreeSet<String>>,
    max_depth: usize,
    min_proteins: usize,
) -> BTreeSet<String> {
    let depth = depths(edges, root);
    let mut pairs: BTreeSet<(String, String)> = BTreeSet::new();
    for (protein, terms) in annotations {
        for t in terms {
            if !depth.contains_key(t) {
                continue;
            }
            for a in ancestors(edges, t) {
                pairs.insert((a, protein.clone()));
            }
        }
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for (term, _) in pairs {
        *counts.entry(term).or_default() += 1;
    }
    counts
        .into_iter()
        .filter(|(t, n)| {
            let d = depth[t];
            d >= 1 && d <= max_depth && *n >= min_proteins
        })
        .map(|(t, _)| t)
        .collect()
}

/// Pair indices per cell key, and the pairs with an unannotated side.
pub type Memberships = (BTreeMap<(String, String), Vec<usize>>, Vec<usize>);

/// Cell memberships by double loop over both term sets, plus the indices
/// of pairs with an unannotated side.
pub fn cell_memberships(pairs: &[(String, String)], terms: &BTreeMap<String, BTreeSet<String>>) -> Memberships {
    let empty = BTreeSet::new();
    let mut cells: BTreeMap<(String, String), Vec<usize>> = BTreeMap::new();
    let mut generic = Vec::new();
    for (i, (a, b)) in pairs.iter().enumerate() {
        let ta = terms.get(a).unwrap_or(&empty);
        let tb = terms.get(b).unwrap_or(&empty);
        if ta.is_empty() || tb.is_empty() {
            generic.push(i);
            continue;
        }
        let mut keys = BTreeSet::new();
        for m in ta {
            for n in tb {
                let key = if m <= n { (m.clone(), n.clone()) } else { (n.clone(), m.clone()) };
                keys.insert(key);
            }
        }
        for key in keys {
            cells.entry(key).or_default().push(i);
        }
    }
    (cells, generic)
}
