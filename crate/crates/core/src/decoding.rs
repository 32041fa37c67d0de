//! Turning a score vector into a predicted label set.
//!
//! Two decoders are provided:
//!
//! * set-size prediction: the cardinalities `|Y_i|` of the training label sets
//!   are treated as classes of an auxiliary multi-class problem, the query's
//!   cardinality is the class with the largest similarity sum, and the
//!   prediction is that many top-scored labels;
//! * a linear threshold `t(x) = <w, f(x)> + b` fit by least squares against
//!   per-instance optimal cut points, predicting `{k : f_k(x) > t(x)}`.

use serde::{Deserialize, Serialize};

use crate::data::{LabelSet, TrainingSet};
use crate::error::{Result, SmlError};
use crate::scoring::ScoreVector;
use crate::similarity::SimilarityConfig;

/// Ridge term added to the diagonal of the normal equations.
pub const THRESHOLD_RIDGE: f64 = 1e-8;

/// Label-set cardinality as a multi-class target.
#[derive(Debug, Clone)]
pub struct SizeModel<'a> {
    training: &'a TrainingSet,
    /// Distinct cardinalities, ascending.
    size_classes: Vec<usize>,
    /// For each training instance, the position of `|Y_i|` in `size_classes`.
    class_of: Vec<usize>,
    similarity: SimilarityConfig,
}

impl<'a> SizeModel<'a> {
    pub fn fit(data: &'a TrainingSet, similarity: SimilarityConfig) -> Result<Self> {
        if data.is_empty() {
            return Err(SmlError::EmptyTrainingSet);
        }
        similarity.validate()?;
        let mut size_classes: Vec<usize> = data.instances().iter().map(|i| i.labels.len()).collect();
        size_classes.sort_unstable();
        size_classes.dedup();
        let class_of = data
            .instances()
            .iter()
            .map(|i| size_classes.binary_search(&i.labels.len()).unwrap())
            .collect();
        Ok(SizeModel {
            training: data,
            size_classes,
            class_of,
            similarity,
        })
    }

    pub fn size_classes(&self) -> &[usize] {
        &self.size_classes
    }

    /// Per-class similarity sums, aligned with [`size_classes`](Self::size_classes).
    pub fn class_scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.training.dim() {
            return Err(SmlError::DimensionMismatch {
                expected: self.training.dim(),
                actual: x.len(),
            });
        }
        let mut sums = vec![0.0; self.size_classes.len()];
        for (inst, &c) in self.training.instances().iter().zip(&self.class_of) {
            sums[c] += self.similarity.evaluate_unchecked(x, &inst.features);
        }
        Ok(sums)
    }

    /// The cardinality with the largest similarity sum; ties go to the
    /// smaller cardinality.
    pub fn predict_size(&self, x: &[f64]) -> Result<usize> {
        let sums = self.class_scores(x)?;
        let mut best = 0;
        for (c, &s) in sums.iter().enumerate().skip(1) {
            if s > sums[best] {
                best = c;
            }
        }
        Ok(self.size_classes[best])
    }
}

/// The `size` highest-scored labels; equal scores favor the smaller label id.
pub fn decode_topk(scores: &[f64], size: usize) -> Result<LabelSet> {
    if size > scores.len() {
        return Err(SmlError::SizeOutOfRange {
            size,
            num_labels: scores.len(),
        });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    Ok(order[..size].iter().map(|&i| i as u32 + 1).collect())
}

/// Number of relevant labels at or below `tau` plus irrelevant labels at or
/// above it.
pub fn threshold_errors(scores: &[f64], relevant: &LabelSet, tau: f64) -> usize {
    scores
        .iter()
        .enumerate()
        .filter(|&(i, &s)| {
            if relevant.contains(i as u32 + 1) {
                s <= tau
            } else {
                s >= tau
            }
        })
        .count()
}

/// A cut point minimizing [`threshold_errors`].
///
/// Candidates are one below the smallest score, one above the largest, and
/// the midpoints between consecutive distinct scores. Among minimizers the
/// widest gap wins (the two outer candidates count as unbounded); remaining
/// ties go to the larger cut point.
pub fn compute_s_target(scores: &[f64], relevant: &LabelSet) -> f64 {
    let mut sorted: Vec<f64> = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let (lo, hi) = match (sorted.first(), sorted.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => return 0.0,
    };

    let mut candidates = Vec::with_capacity(sorted.len() + 1);
    candidates.push((lo - 1.0, f64::INFINITY));
    for w in sorted.windows(2) {
        candidates.push((0.5 * (w[0] + w[1]), w[1] - w[0]));
    }
    candidates.push((hi + 1.0, f64::INFINITY));

    let mut best: Option<(usize, f64, f64)> = None;
    for (tau, width) in candidates {
        let err = threshold_errors(scores, relevant, tau);
        let better = match best {
            None => true,
            Some((e, w, t)) => err < e || (err == e && (width > w || (width == w && tau > t))),
        };
        if better {
            best = Some((err, width, tau));
        }
    }
    best.map(|(_, _, tau)| tau).unwrap_or(0.0)
}

/// `t(x) = <w, f(x)> + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl ThresholdModel {
    pub fn threshold(&self, scores: &[f64]) -> Result<f64> {
        if scores.len() != self.weights.len() {
            return Err(SmlError::DimensionMismatch {
                expected: self.weights.len(),
                actual: scores.len(),
            });
        }
        Ok(self.weights.iter().zip(scores).map(|(w, f)| w * f).sum::<f64>() + self.bias)
    }

    /// Sum of squared residuals over the given rows.
    pub fn objective(&self, rows: &[ScoreVector], targets: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for (row, &s) in rows.iter().zip(targets) {
            let r = self.threshold(row)? - s;
            total += r * r;
        }
        Ok(total)
    }
}

/// Least-squares fit of `(w, b)` against the targets, through the normal
/// equations of the bias-augmented design with a small ridge term.
pub fn fit_threshold(rows: &[ScoreVector], targets: &[f64]) -> Result<ThresholdModel> {
    if rows.len() != targets.len() {
        return Err(SmlError::LengthMismatch {
            left: rows.len(),
            right: targets.len(),
        });
    }
    let first = rows.first().ok_or(SmlError::EmptyTrainingSet)?;
    let k = first.num_labels();
    if let Some(row) = rows.iter().find(|r| r.num_labels() != k) {
        return Err(SmlError::DimensionMismatch {
            expected: k,
            actual: row.num_labels(),
        });
    }
    let p = k + 1;

    // Column scaling keeps the Gram matrix well conditioned when raw scores
    // are in the hundreds; the bias column is left at 1.
    let mut scale = vec![1.0; p];
    for (j, s) in scale.iter_mut().take(k).enumerate() {
        let m = rows.iter().map(|r| r[j].abs()).fold(0.0, f64::max);
        if m > 0.0 {
            *s = m;
        }
    }

    let mut gram = vec![0.0; p * p];
    let mut rhs = vec![0.0; p];
    let mut a = vec![0.0; p];
    for (row, &t) in rows.iter().zip(targets) {
        for j in 0..k {
            a[j] = row[j] / scale[j];
        }
        a[k] = 1.0;
        for i in 0..p {
            rhs[i] += a[i] * t;
            for j in 0..=i {
                gram[i * p + j] += a[i] * a[j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            gram[j * p + i] = gram[i * p + j];
        }
    }

    let mut ridge = THRESHOLD_RIDGE;
    let beta = loop {
        let mut m = gram.clone();
        for i in 0..p {
            m[i * p + i] += ridge;
        }
        if let Some(beta) = cholesky_solve(&mut m, &rhs, p) {
            break beta;
        }
        ridge *= 10.0;
        if ridge > 1.0 {
            return Err(SmlError::InvalidConfig(
                "threshold normal equations are numerically singular".into(),
            ));
        }
    };

    let weights: Vec<f64> = (0..k).map(|j| beta[j] / scale[j]).collect();
    let model = ThresholdModel {
        weights,
        bias: beta[k],
    };
    if model.weights.iter().any(|w| !w.is_finite()) || !model.bias.is_finite() {
        return Err(SmlError::InvalidConfig("threshold fit produced non-finite values".into()));
    }
    Ok(model)
}

/// Solves `m x = b` for symmetric positive definite `m` (row-major, `p x p`),
/// overwriting `m` with its Cholesky factor. `None` if a pivot is not
/// positive.
fn cholesky_solve(m: &mut [f64], b: &[f64], p: usize) -> Option<Vec<f64>> {
    for j in 0..p {
        let mut d = m[j * p + j];
        for q in 0..j {
            d -= m[j * p + q] * m[j * p + q];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        m[j * p + j] = d;
        for i in j + 1..p {
            let mut s = m[i * p + j];
            for q in 0..j {
                s -= m[i * p + q] * m[j * p + q];
            }
            m[i * p + j] = s / d;
        }
    }
    let mut y = vec![0.0; p];
    for i in 0..p {
        let mut s = b[i];
        for q in 0..i {
            s -= m[i * p + q] * y[q];
        }
        y[i] = s / m[i * p + i];
    }
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let mut s = y[i];
        for q in i + 1..p {
            s -= m[q * p + i] * x[q];
        }
        x[i] = s / m[i * p + i];
    }
    Some(x)
}

/// `{k : f_k > t(x)}`; a score equal to the threshold is excluded.
pub fn decode_threshold(scores: &[f64], model: &ThresholdModel) -> Result<LabelSet> {
    let t = model.threshold(scores)?;
    Ok(scores
        .iter()
        .enumerate()
        .filter(|&(_, &s)| s > t)
        .map(|(i, _)| i as u32 + 1)
        .collect())
}
