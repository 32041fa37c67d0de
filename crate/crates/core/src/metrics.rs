//! Multi-label evaluation criteria.
//!
//! Ranks are 1-based with 1 the highest score; equal scores are ordered by
//! ascending label id. Instances for which a criterion is undefined (empty
//! truth set, or for ranking loss a truth set that is empty or full) are
//! skipped and reported through [`MetricOutcome::skipped`].

use serde::{Deserialize, Serialize};

use crate::data::LabelSet;
use crate::error::{Result, SmlError};

/// `rank[k - 1]` is the rank of label `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankVector(Vec<usize>);

impl RankVector {
    /// Rank of label `k` (1-based).
    pub fn rank(&self, k: u32) -> usize {
        self.0[k as usize - 1]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

pub fn rank_labels(scores: &[f64]) -> RankVector {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut rank = vec![0; scores.len()];
    for (pos, &label) in order.iter().enumerate() {
        rank[label] = pos + 1;
    }
    RankVector(rank)
}

/// Top-ranked label (ties to the smallest id). `None` for an empty vector.
pub fn argmax_label(scores: &[f64]) -> Option<u32> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|b| s > scores[b]) {
            best = Some(i);
        }
    }
    best.map(|b| b as u32 + 1)
}

/// A metric value together with how many instances it was computed over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricOutcome {
    pub value: f64,
    pub counted: usize,
    pub skipped: usize,
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(SmlError::LengthMismatch { left: a, right: b });
    }
    Ok(())
}

/// Averages the per-instance terms yielded by `term`, skipping `None`s.
fn average<S, F>(metric: &'static str, scores: &[S], truth: &[LabelSet], term: F) -> Result<MetricOutcome>
where
    S: AsRef<[f64]>,
    F: Fn(&[f64], &LabelSet) -> Option<f64>,
{
    check_lengths(scores.len(), truth.len())?;
    let mut sum = 0.0;
    let mut counted = 0;
    for (s, y) in scores.iter().zip(truth) {
        if let Some(v) = term(s.as_ref(), y) {
            sum += v;
            counted += 1;
        }
    }
    if counted == 0 {
        return Err(SmlError::UndefinedMetric { metric });
    }
    Ok(MetricOutcome {
        value: sum / counted as f64,
        counted,
        skipped: truth.len() - counted,
    })
}

/// Mean size of the symmetric difference between predicted and true sets,
/// divided by the number of labels.
pub fn hamming_loss(pred: &[LabelSet], truth: &[LabelSet], num_labels: usize) -> Result<f64> {
    check_lengths(pred.len(), truth.len())?;
    if pred.is_empty() {
        return Err(SmlError::UndefinedMetric { metric: "hamming loss" });
    }
    if num_labels == 0 {
        return Err(SmlError::InvalidConfig("hamming loss needs at least one label".into()));
    }
    let mut total = 0.0;
    for (p, t) in pred.iter().zip(truth) {
        let only_pred = p.iter().filter(|&k| !t.contains(k)).count();
        let only_truth = t.iter().filter(|&k| !p.contains(k)).count();
        total += (only_pred + only_truth) as f64 / num_labels as f64;
    }
    Ok(total / pred.len() as f64)
}

/// Fraction of instances whose top-ranked label is not relevant.
pub fn one_error<S: AsRef<[f64]>>(scores: &[S], truth: &[LabelSet]) -> Result<MetricOutcome> {
    average("one-error", scores, truth, |s, y| {
        if y.is_empty() {
            return None;
        }
        let top = argmax_label(s)?;
        Some(if y.contains(top) { 0.0 } else { 1.0 })
    })
}

/// Mean depth of the lowest-ranked relevant label, minus one.
pub fn coverage<S: AsRef<[f64]>>(scores: &[S], truth: &[LabelSet]) -> Result<MetricOutcome> {
    average("coverage", scores, truth, |s, y| {
        let ranks = rank_labels(s);
        let deepest = y.iter().map(|k| ranks.rank(k)).max()?;
        Some((deepest - 1) as f64)
    })
}

/// Fraction of (relevant, irrelevant) pairs whose relevant score is not
/// strictly above the irrelevant one.
pub fn ranking_loss<S: AsRef<[f64]>>(scores: &[S], truth: &[LabelSet]) -> Result<MetricOutcome> {
    average("ranking loss", scores, truth, |s, y| {
        let k = s.len();
        let rel = y.len();
        if rel == 0 || rel >= k {
            return None;
        }
        let mut bad = 0usize;
        for a in y.iter() {
            let fa = s[a as usize - 1];
            for (b, &fb) in s.iter().enumerate() {
                if !y.contains(b as u32 + 1) && fa <= fb {
                    bad += 1;
                }
            }
        }
        Some(bad as f64 / (rel * (k - rel)) as f64)
    })
}

/// Mean over relevant labels of the fraction of relevant labels ranked at or
/// above that label.
pub fn average_precision<S: AsRef<[f64]>>(scores: &[S], truth: &[LabelSet]) -> Result<MetricOutcome> {
    average("average precision", scores, truth, |s, y| {
        if y.is_empty() {
            return None;
        }
        let ranks = rank_labels(s);
        let mut relevant_ranks: Vec<usize> = y.iter().map(|k| ranks.rank(k)).collect();
        relevant_ranks.sort_unstable();
        // the i-th smallest relevant rank has exactly i+1 relevant labels at or above it
        let sum: f64 = relevant_ranks
            .iter()
            .enumerate()
            .map(|(i, &r)| (i + 1) as f64 / r as f64)
            .sum();
        Some(sum / y.len() as f64)
    })
}

/// The five criteria on one fold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub hamming_loss: f64,
    pub one_error: f64,
    pub coverage: f64,
    pub ranking_loss: f64,
    pub average_precision: f64,
}

/// Per-criterion count of instances that were skipped.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipCounts {
    pub one_error: usize,
    pub coverage: usize,
    pub ranking_loss: usize,
    pub average_precision: usize,
}

impl SkipCounts {
    pub fn add(&mut self, other: &SkipCounts) {
        self.one_error += other.one_error;
        self.coverage += other.coverage;
        self.ranking_loss += other.ranking_loss;
        self.average_precision += other.average_precision;
    }
}

impl FoldMetrics {
    pub const NAMES: [&'static str; 5] = [
        "hamming_loss",
        "one_error",
        "coverage",
        "ranking_loss",
        "average_precision",
    ];

    /// Computes every criterion for one set of predictions.
    pub fn evaluate<S: AsRef<[f64]>>(
        scores: &[S],
        predicted: &[LabelSet],
        truth: &[LabelSet],
        num_labels: usize,
    ) -> Result<(FoldMetrics, SkipCounts)> {
        let oe = one_error(scores, truth)?;
        let cov = coverage(scores, truth)?;
        let rl = ranking_loss(scores, truth)?;
        let ap = average_precision(scores, truth)?;
        Ok((
            FoldMetrics {
                hamming_loss: hamming_loss(predicted, truth, num_labels)?,
                one_error: oe.value,
                coverage: cov.value,
                ranking_loss: rl.value,
                average_precision: ap.value,
            },
            SkipCounts {
                one_error: oe.skipped,
                coverage: cov.skipped,
                ranking_loss: rl.skipped,
                average_precision: ap.skipped,
            },
        ))
    }

    pub fn values(&self) -> [f64; 5] {
        [
            self.hamming_loss,
            self.one_error,
            self.coverage,
            self.ranking_loss,
            self.average_precision,
        ]
    }

    pub fn from_values(v: [f64; 5]) -> Self {
        FoldMetrics {
            hamming_loss: v[0],
            one_error: v[1],
            coverage: v[2],
            ranking_loss: v[3],
            average_precision: v[4],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub std: f64,
}

impl MetricSummary {
    /// Arithmetic mean and sample (n - 1) standard deviation; the deviation
    /// of a single value is 0.
    pub fn of(values: &[f64]) -> MetricSummary {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        MetricSummary { mean, std }
    }
}

/// Mean and standard deviation of every criterion across folds.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub hamming_loss: MetricSummary,
    pub one_error: MetricSummary,
    pub coverage: MetricSummary,
    pub ranking_loss: MetricSummary,
    pub average_precision: MetricSummary,
    pub per_fold: Vec<FoldMetrics>,
}

impl EvaluationReport {
    pub fn summaries(&self) -> [MetricSummary; 5] {
        [
            self.hamming_loss,
            self.one_error,
            self.coverage,
            self.ranking_loss,
            self.average_precision,
        ]
    }
}

pub fn aggregate_folds(per_fold: &[FoldMetrics]) -> Result<EvaluationReport> {
    if per_fold.is_empty() {
        return Err(SmlError::NoFolds);
    }
    let column = |i: usize| -> MetricSummary {
        let v: Vec<f64> = per_fold.iter().map(|f| f.values()[i]).collect();
        MetricSummary::of(&v)
    };
    Ok(EvaluationReport {
        hamming_loss: column(0),
        one_error: column(1),
        coverage: column(2),
        ranking_loss: column(3),
        average_precision: column(4),
        per_fold: per_fold.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[u32]) -> LabelSet {
        LabelSet::new(v.iter().copied())
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank_labels(&[0.2, 0.9, 0.5]).as_slice(), &[3, 1, 2]);
        assert_eq!(rank_labels(&[0.4, 0.4, 0.4]).as_slice(), &[1, 2, 3]);
        assert_eq!(rank_labels(&[7.0]).as_slice(), &[1]);
    }

    #[test]
    fn hamming_examples() {
        let t = vec![set(&[1, 2]), set(&[3])];
        assert_eq!(hamming_loss(&t, &t, 3).unwrap(), 0.0);
        let v = hamming_loss(&[set(&[1, 3])], &[set(&[1, 2])], 3).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
        let comp: Vec<LabelSet> = t.iter().map(|y| y.complement(3)).collect();
        assert_eq!(hamming_loss(&comp, &t, 3).unwrap(), 1.0);
        assert!(matches!(hamming_loss(&t[..1], &t, 3), Err(SmlError::LengthMismatch { .. })));
    }

    #[test]
    fn one_error_examples() {
        let scores = vec![vec![0.9, 0.1], vec![0.2, 0.8]];
        assert_eq!(one_error(&scores, &[set(&[1]), set(&[2])]).unwrap().value, 0.0);
        assert_eq!(one_error(&scores, &[set(&[1]), set(&[1])]).unwrap().value, 0.5);
        assert_eq!(one_error(&scores, &[set(&[2]), set(&[1])]).unwrap().value, 1.0);
        let skipped = one_error(&scores, &[set(&[1]), set(&[])]).unwrap();
        assert_eq!((skipped.value, skipped.counted, skipped.skipped), (0.0, 1, 1));
        assert!(matches!(
            one_error(&scores, &[set(&[]), set(&[])]),
            Err(SmlError::UndefinedMetric { .. })
        ));
    }

    #[test]
    fn coverage_examples() {
        let s = vec![vec![0.9, 0.1, 0.5, 0.3]];
        assert_eq!(coverage(&s, &[set(&[1])]).unwrap().value, 0.0);
        assert_eq!(coverage(&s, &[set(&[2])]).unwrap().value, 3.0);
        assert_eq!(coverage(&s, &[set(&[1, 3])]).unwrap().value, 1.0);
    }

    #[test]
    fn ranking_loss_examples() {
        let s = vec![vec![0.9, 0.3, 0.5, 0.1]];
        assert_eq!(ranking_loss(&s, &[set(&[1, 3])]).unwrap().value, 0.0);
        assert_eq!(ranking_loss(&s, &[set(&[2, 4])]).unwrap().value, 1.0);
        assert_eq!(ranking_loss(&s, &[set(&[1, 2])]).unwrap().value, 0.25);
        // a tie between a relevant and an irrelevant label is a violation
        assert_eq!(ranking_loss(&[vec![0.5, 0.5]], &[set(&[1])]).unwrap().value, 1.0);
        let full = ranking_loss(&[vec![0.5, 0.4], vec![0.5, 0.4]], &[set(&[1, 2]), set(&[1])]).unwrap();
        assert_eq!((full.value, full.skipped), (0.0, 1));
    }

    #[test]
    fn average_precision_examples() {
        let s = vec![vec![0.9, 0.5, 0.1]];
        assert_eq!(average_precision(&s, &[set(&[1, 2])]).unwrap().value, 1.0);
        assert!((average_precision(&s, &[set(&[3])]).unwrap().value - 1.0 / 3.0).abs() < 1e-15);
        let v = average_precision(&s, &[set(&[1, 3])]).unwrap().value;
        assert!((v - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn aggregate_examples() {
        let f = |v: f64| FoldMetrics::from_values([v; 5]);
        let one = aggregate_folds(&[f(0.3)]).unwrap();
        assert!(one.summaries().iter().all(|s| s.std == 0.0 && s.mean == 0.3));
        let two = aggregate_folds(&[f(0.1), f(0.3)]).unwrap();
        assert!((two.hamming_loss.mean - 0.2).abs() < 1e-15);
        assert!((two.hamming_loss.std - 0.02f64.sqrt()).abs() < 1e-15);
        let same = aggregate_folds(&[f(0.25), f(0.25), f(0.25)]).unwrap();
        assert_eq!(same.coverage.std, 0.0);
        assert!(matches!(aggregate_folds(&[]), Err(SmlError::NoFolds)));
    }
}
