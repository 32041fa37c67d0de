//! Exhaustive reference implementations, written against plain vectors and
//! membership masks so they share no code with the library.

use nalgebra::{DMatrix, DVector};

/// `rank[k] = 1 + #{j : s_j > s_k} + #{j < k : s_j == s_k}`.
pub fn ranks(scores: &[f64]) -> Vec<usize> {
    (0..scores.len())
        .map(|k| {
            1 + (0..scores.len())
                .filter(|&j| scores[j] > scores[k] || (j < k && scores[j] == scores[k]))
                .count()
        })
        .collect()
}

pub fn hamming(pred: &[Vec<bool>], truth: &[Vec<bool>]) -> f64 {
    let k = truth[0].len();
    let mut total = 0.0;
    for (p, t) in pred.iter().zip(truth) {
        let mut diff = 0;
        for j in 0..k {
            if p[j] != t[j] {
                diff += 1;
            }
        }
        total += diff as f64 / k as f64;
    }
    total / truth.len() as f64
}

fn mean_over<F: Fn(&[f64], &[bool]) -> Option<f64>>(scores: &[Vec<f64>], truth: &[Vec<bool>], f: F) -> Option<f64> {
    let vals: Vec<f64> = scores.iter().zip(truth).filter_map(|(s, t)| f(s, t)).collect();
    if vals.is_empty() {
        None
    } else {
        Some(vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

pub fn one_error(scores: &[Vec<f64>], truth: &[Vec<bool>]) -> Option<f64> {
    mean_over(scores, truth, |s, t| {
        if !t.contains(&true) {
            return None;
        }
        let r = ranks(s);
        let top = r.iter().position(|&x| x == 1).unwrap();
        Some(if t[top] { 0.0 } else { 1.0 })
    })
}

pub fn coverage(scores: &[Vec<f64>], truth: &[Vec<bool>]) -> Option<f64> {
    mean_over(scores, truth, |s, t| {
        let r = ranks(s);
        (0..s.len()).filter(|&k| t[k]).map(|k| r[k] as f64 - 1.0).reduce(f64::max)
    })
}

pub fn ranking_loss(scores: &[Vec<f64>], truth: &[Vec<bool>]) -> Option<f64> {
    mean_over(scores, truth, |s, t| {
        let mut pairs = 0usize;
        let mut bad = 0usize;
        for a in 0..s.len() {
            for b in 0..s.len() {
                if t[a] && !t[b] {
                    pairs += 1;
                    if s[a] <= s[b] {
                        bad += 1;
                    }
                }
            }
        }
        (pairs > 0).then(|| bad as f64 / pairs as f64)
    })
}

pub fn average_precision(scores: &[Vec<f64>], truth: &[Vec<bool>]) -> Option<f64> {
    mean_over(scores, truth, |s, t| {
        let r = ranks(s);
        let rel: Vec<usize> = (0..s.len()).filter(|&k| t[k]).collect();
        if rel.is_empty() {
            return None;
        }
        let mut sum = 0.0;
        for &k in &rel {
            let above = rel.iter().filter(|&&j| r[j] <= r[k]).count();
            sum += above as f64 / r[k] as f64;
        }
        Some(sum / rel.len() as f64)
    })
}

pub fn threshold_errors(scores: &[f64], relevant: &[bool], tau: f64) -> usize {
    let mut e = 0;
    for (s, &r) in scores.iter().zip(relevant) {
        if (r && *s <= tau) || (!r && *s >= tau) {
            e += 1;
        }
    }
    e
}

/// Smallest misclassification count over every score, every midpoint, and
/// both infinities.
pub fn best_threshold_errors(scores: &[f64], relevant: &[bool]) -> usize {
    let mut points = vec![f64::NEG_INFINITY, f64::INFINITY];
    for &a in scores {
        points.push(a);
        for &b in scores {
            points.push(0.5 * (a + b));
        }
    }
    points
        .into_iter()
        .map(|t| threshold_errors(scores, relevant, t))
        .min()
        .unwrap()
}

/// Minimum of `sum (<w, f_i> + b - s_i)^2`, from the pseudo-inverse of the
/// Gram matrix built on its symmetric eigendecomposition. Eigenvalues below
/// `1e-10` of the largest are treated as zero.
pub fn least_squares_objective(rows: &[Vec<f64>], targets: &[f64]) -> f64 {
    let n = rows.len();
    let k = rows[0].len();
    let a = DMatrix::from_fn(n, k + 1, |i, j| if j < k { rows[i][j] } else { 1.0 });
    let b = DVector::from_column_slice(targets);
    let gram = a.transpose() * &a;
    let atb = a.transpose() * &b;
    let eig = gram.symmetric_eigen();
    let cutoff = 1e-10 * eig.eigenvalues.max();
    let mut x = DVector::zeros(k + 1);
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > cutoff {
            let v = eig.eigenvectors.column(i);
            x += v * (v.dot(&atb) / lambda);
        }
    }
    (a * x - b).norm_squared()
}

/// Similarity-sum multi-class rule: the class whose members have the largest
/// total similarity to the query; ties to the smallest class id.
pub fn multiclass_argmax(classes: &[usize], sims: &[f64], num_classes: usize) -> usize {
    let mut totals = vec![0.0; num_classes + 1];
    for (i, &c) in classes.iter().enumerate() {
        totals[c] += sims[i];
    }
    let mut best = 1;
    for c in 2..=num_classes {
        if totals[c] > totals[best] {
            best = c;
        }
    }
    best
}
