use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum SmlError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("zero-norm feature vector (instance {instance})")]
    ZeroNorm { instance: usize },

    #[error("invalid label id {label} (instance {instance}); label ids start at 1")]
    InvalidLabel { instance: usize, label: i64 },

    #[error("label id {label} out of range 1..={num_labels}")]
    LabelOutOfRange { label: usize, num_labels: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("dimension mismatch at batch index {index}: expected {expected}, got {actual}")]
    BatchDimensionMismatch {
        index: usize,
        expected: usize,
        actual: usize,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("fold count {folds} out of range 2..={instances}")]
    FoldCount { folds: usize, instances: usize },

    #[error("sampling fraction {0} out of range (0, 1]")]
    Fraction(f64),

    #[error("set size {size} out of range 0..={num_labels}")]
    SizeOutOfRange { size: usize, num_labels: usize },

    #[error("{metric} is undefined: every instance was skipped")]
    UndefinedMetric { metric: &'static str },

    #[error("no fold results to aggregate")]
    NoFolds,

    #[error("tuning subset has {available} instances but {required} inner folds were requested")]
    TuningSubsetTooSmall { available: usize, required: usize },

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<SmlError>,
    },

    #[error("report serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SmlError>;
