//! Per-label similarity sums.
//!
//! The confidence of label `k` for a query `x` is the sum of `Φ(x, x_j)` over
//! the training instances that carry `k`. Sums always run in ascending
//! training-id order, so every path through this module (per label, all
//! labels, batched, any worker count) produces bit-identical values.

use std::borrow::Cow;

use rayon::prelude::*;

use crate::data::{sample_ids, TrainingSet};
use crate::error::{Result, SmlError};
use crate::similarity::SimilarityConfig;

/// Training-set subsampling applied once when a model is fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampling {
    pub fraction: f64,
    pub seed: u64,
}

/// One confidence per label; index `k - 1` holds label `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    pub fn new(scores: Vec<f64>) -> Self {
        ScoreVector(scores)
    }

    pub fn num_labels(&self) -> usize {
        self.0.len()
    }

    /// Score of label `k` (1-based).
    pub fn get(&self, k: usize) -> f64 {
        self.0[k - 1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for ScoreVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Deref for ScoreVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Uniform sample without replacement of `ceil(fraction * n)` instances,
/// kept in their original order.
pub fn sample_training(data: &TrainingSet, fraction: f64, seed: u64) -> Result<TrainingSet> {
    check_fraction(fraction)?;
    let count = (fraction * data.len() as f64).ceil() as usize;
    Ok(data.subset(&sample_ids(data.len(), count, seed)))
}

fn check_fraction(fraction: f64) -> Result<()> {
    if fraction > 0.0 && fraction <= 1.0 {
        Ok(())
    } else {
        Err(SmlError::Fraction(fraction))
    }
}

/// An instance-based multi-label scorer. Fitting only validates and (when
/// sampling is requested) draws the sample.
#[derive(Debug, Clone)]
pub struct SmlModel<'a> {
    training: Cow<'a, TrainingSet>,
    similarity: SimilarityConfig,
    sampling: Option<Sampling>,
}

impl<'a> SmlModel<'a> {
    pub fn fit(
        data: &'a TrainingSet,
        similarity: SimilarityConfig,
        sampling: Option<Sampling>,
    ) -> Result<Self> {
        if data.is_empty() {
            return Err(SmlError::EmptyTrainingSet);
        }
        similarity.validate()?;
        let training = match sampling {
            Some(s) => Cow::Owned(sample_training(data, s.fraction, s.seed)?),
            None => Cow::Borrowed(data),
        };
        Ok(SmlModel {
            training,
            similarity,
            sampling,
        })
    }

    /// The instances actually used for scoring (post-sampling).
    pub fn training(&self) -> &TrainingSet {
        &self.training
    }

    pub fn similarity(&self) -> SimilarityConfig {
        self.similarity
    }

    pub fn sampling(&self) -> Option<Sampling> {
        self.sampling
    }

    pub fn num_labels(&self) -> usize {
        self.training.num_labels()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.training.dim() {
            return Err(SmlError::DimensionMismatch {
                expected: self.training.dim(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Sum of similarities between `x` and the training instances carrying
    /// label `k`.
    pub fn score_label(&self, x: &[f64], k: usize) -> Result<f64> {
        self.check_dim(x)?;
        let ids = self.training.label_subset(k)?;
        let mut sum = 0.0;
        for &j in ids {
            sum += self
                .similarity
                .evaluate_unchecked(x, self.training.features(j));
        }
        Ok(sum)
    }

    /// All label scores in a single pass over the training set.
    pub fn score_all(&self, x: &[f64]) -> Result<ScoreVector> {
        self.check_dim(x)?;
        Ok(self.score_all_unchecked(x))
    }

    fn score_all_unchecked(&self, x: &[f64]) -> ScoreVector {
        let mut scores = vec![0.0; self.training.num_labels()];
        for inst in self.training.instances() {
            if inst.labels.is_empty() {
                continue;
            }
            let s = self.similarity.evaluate_unchecked(x, &inst.features);
            for k in inst.labels.iter() {
                scores[k as usize - 1] += s;
            }
        }
        ScoreVector(scores)
    }

    /// Scores every query, fanning out over the current rayon pool. Output
    /// order matches input order.
    pub fn score_batch<X: AsRef<[f64]> + Sync>(&self, xs: &[X]) -> Result<Vec<ScoreVector>> {
        let dim = self.training.dim();
        if let Some((index, x)) = xs.iter().enumerate().find(|(_, x)| x.as_ref().len() != dim) {
            return Err(SmlError::BatchDimensionMismatch {
                index,
                expected: dim,
                actual: x.as_ref().len(),
            });
        }
        Ok(xs
            .par_iter()
            .map(|x| self.score_all_unchecked(x.as_ref()))
            .collect())
    }
}
