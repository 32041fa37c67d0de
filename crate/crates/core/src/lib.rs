//! Similarity-based multi-label learning.
//!
//! Labels are scored by summing a similarity function between the query and
//! every training instance carrying the label. A label set is then decoded
//! either by predicting its cardinality from similarity sums over training
//! set sizes, or by a linear threshold on the score vector.
//!
//! ```
//! use sml::data::{parse_dataset, DataFormat};
//! use sml::decoding::{decode_topk, SizeModel};
//! use sml::scoring::SmlModel;
//! use sml::similarity::SimilarityConfig;
//!
//! let train = parse_dataset("1,2 1:1 2:0.1\n2 1:0.1 2:1\n", DataFormat::MultilabelSvm).unwrap();
//! let sim = SimilarityConfig::rbf(1.0);
//! let model = SmlModel::fit(&train, sim, None).unwrap();
//! let sizes = SizeModel::fit(&train, sim).unwrap();
//!
//! let x = train.features(0);
//! let scores = model.score_all(x).unwrap();
//! let labels = decode_topk(&scores, sizes.predict_size(x).unwrap()).unwrap();
//! assert_eq!(labels.as_slice(), &[1, 2]);
//! ```

pub mod data;
pub mod decoding;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod scoring;
pub mod similarity;

pub use data::{DataFormat, FeatureVector, FoldPlan, LabelSet, TrainingSet};
pub use error::{Result, SmlError};
pub use scoring::{ScoreVector, SmlModel};
pub use similarity::SimilarityConfig;
