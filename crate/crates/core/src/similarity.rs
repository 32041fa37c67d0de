//! Similarity functions over pairs of feature vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SmlError};

pub const DEFAULT_POLY_C: f64 = 1.0;
pub const DEFAULT_POLY_DEGREE: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SimilarityConfig {
    /// `exp(-gamma * ||a - b||^2)`
    Rbf { gamma: f64 },
    /// `(<a, b> + c)^degree`; degree 1 is the linear variant, 2 the quadratic one.
    Polynomial { c: f64, degree: u32 },
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig::Rbf { gamma: 1.0 }
    }
}

impl SimilarityConfig {
    pub fn rbf(gamma: f64) -> Self {
        SimilarityConfig::Rbf { gamma }
    }

    pub fn polynomial(c: f64, degree: u32) -> Self {
        SimilarityConfig::Polynomial { c, degree }
    }

    /// Quadratic polynomial with `c = 1`.
    pub fn default_polynomial() -> Self {
        SimilarityConfig::Polynomial {
            c: DEFAULT_POLY_C,
            degree: DEFAULT_POLY_DEGREE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SimilarityConfig::Rbf { gamma } if !(gamma > 0.0 && gamma.is_finite()) => Err(
                SmlError::InvalidConfig(format!("rbf gamma must be positive, got {gamma}")),
            ),
            SimilarityConfig::Polynomial { c, .. } if !(c >= 0.0 && c.is_finite()) => Err(
                SmlError::InvalidConfig(format!("polynomial c must be nonnegative, got {c}")),
            ),
            SimilarityConfig::Polynomial { degree: 0, .. } => Err(SmlError::InvalidConfig(
                "polynomial degree must be at least 1".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Similarity between `a` and `b`.
    pub fn evaluate(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        check_dims(a, b)?;
        Ok(self.evaluate_unchecked(a, b))
    }

    /// Same as [`evaluate`](Self::evaluate) without the dimension check.
    #[inline]
    pub(crate) fn evaluate_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            SimilarityConfig::Rbf { gamma } => (-gamma * squared_distance(a, b)).exp(),
            SimilarityConfig::Polynomial { c, degree } => poly(dot(a, b) + c, degree),
        }
    }
}

pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> Result<f64> {
    check_dims(a, b)?;
    Ok((-gamma * squared_distance(a, b)).exp())
}

pub fn polynomial(a: &[f64], b: &[f64], c: f64, degree: u32) -> Result<f64> {
    check_dims(a, b)?;
    Ok(poly(dot(a, b) + c, degree))
}

fn poly(base: f64, degree: u32) -> f64 {
    match i32::try_from(degree) {
        Ok(d) => base.powi(d),
        Err(_) => base.powf(degree as f64),
    }
}

fn check_dims(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(SmlError::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}
