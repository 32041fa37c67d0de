//! Cross-validation experiments, RBF bandwidth tuning, and report output.

use std::borrow::Cow;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{load_dataset, sample_ids, DataFormat, FoldPlan, LabelSet, TrainingSet};
use crate::decoding::{compute_s_target, decode_threshold, decode_topk, fit_threshold, SizeModel, ThresholdModel};
use crate::error::{Result, SmlError};
use crate::metrics::{aggregate_folds, EvaluationReport, FoldMetrics, MetricSummary, SkipCounts};
use crate::scoring::{sample_training, ScoreVector, SmlModel};
use crate::similarity::SimilarityConfig;

pub const DEFAULT_GAMMA_GRID: [f64; 8] = [0.01, 0.1, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0];
pub const DEFAULT_INNER_FOLDS: usize = 5;
pub const DEFAULT_TUNING_FRACTION: f64 = 0.10;
pub const DEFAULT_FOLDS: usize = 10;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decoder {
    SetSize,
    Threshold,
}

impl FromStr for Decoder {
    type Err = SmlError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "setsize" => Ok(Decoder::SetSize),
            "threshold" => Ok(Decoder::Threshold),
            other => Err(SmlError::InvalidConfig(format!("unknown decoder '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = SmlError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(SmlError::InvalidConfig(format!("unknown output format '{other}'"))),
        }
    }
}

/// The five evaluation criteria, usable as a tuning objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    HammingLoss,
    OneError,
    Coverage,
    RankingLoss,
    AveragePrecision,
}

impl Criterion {
    pub fn higher_is_better(self) -> bool {
        matches!(self, Criterion::AveragePrecision)
    }

    pub fn pick(self, m: &FoldMetrics) -> f64 {
        match self {
            Criterion::HammingLoss => m.hamming_loss,
            Criterion::OneError => m.one_error,
            Criterion::Coverage => m.coverage,
            Criterion::RankingLoss => m.ranking_loss,
            Criterion::AveragePrecision => m.average_precision,
        }
    }
}

impl FromStr for Criterion {
    type Err = SmlError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hamming_loss" => Ok(Criterion::HammingLoss),
            "one_error" => Ok(Criterion::OneError),
            "coverage" => Ok(Criterion::Coverage),
            "ranking_loss" => Ok(Criterion::RankingLoss),
            "average_precision" => Ok(Criterion::AveragePrecision),
            other => Err(SmlError::InvalidConfig(format!("unknown criterion '{other}'"))),
        }
    }
}

/// How the RBF bandwidth is chosen automatically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningPlan {
    pub gamma_grid: Vec<f64>,
    pub inner_folds: usize,
    pub tuning_fraction: f64,
    pub criterion: Criterion,
}

impl Default for TuningPlan {
    fn default() -> Self {
        TuningPlan {
            gamma_grid: DEFAULT_GAMMA_GRID.to_vec(),
            inner_folds: DEFAULT_INNER_FOLDS,
            tuning_fraction: DEFAULT_TUNING_FRACTION,
            criterion: Criterion::AveragePrecision,
        }
    }
}

impl TuningPlan {
    pub fn validate(&self) -> Result<()> {
        if self.gamma_grid.is_empty() {
            return Err(SmlError::InvalidConfig("gamma grid is empty".into()));
        }
        if let Some(g) = self.gamma_grid.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
            return Err(SmlError::InvalidConfig(format!("gamma grid entry {g} is not positive")));
        }
        if !(self.tuning_fraction > 0.0 && self.tuning_fraction <= 1.0) {
            return Err(SmlError::Fraction(self.tuning_fraction));
        }
        if self.inner_folds < 2 {
            return Err(SmlError::InvalidConfig("tuning needs at least 2 inner folds".into()));
        }
        Ok(())
    }
}

/// Similarity used by an experiment: fixed, or RBF with a tuned bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimilarityChoice {
    Fixed(SimilarityConfig),
    AutoRbf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub data_path: PathBuf,
    pub format: DataFormat,
    pub fold_count: usize,
    pub seed: u64,
    pub similarity: SimilarityChoice,
    pub decoder: Decoder,
    pub sample_fraction: Option<f64>,
    pub tuning: TuningPlan,
    pub out_path: Option<PathBuf>,
    pub out_format: OutputFormat,
}

impl ExperimentConfig {
    pub fn new(data_path: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            data_path: data_path.into(),
            format: DataFormat::MultilabelSvm,
            fold_count: DEFAULT_FOLDS,
            seed: DEFAULT_SEED,
            similarity: SimilarityChoice::AutoRbf,
            decoder: Decoder::SetSize,
            sample_fraction: None,
            tuning: TuningPlan::default(),
            out_path: None,
            out_format: OutputFormat::Json,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.fold_count < 2 {
            return Err(SmlError::InvalidConfig("fold count must be at least 2".into()));
        }
        if let Some(f) = self.sample_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(SmlError::Fraction(f));
            }
        }
        match self.similarity {
            SimilarityChoice::Fixed(cfg) => cfg.validate()?,
            SimilarityChoice::AutoRbf => self.tuning.validate()?,
        }
        Ok(())
    }

    fn echo(&self) -> ConfigEcho {
        let (kind, gamma, c, d) = match self.similarity {
            SimilarityChoice::AutoRbf => ("rbf", GammaEcho::Auto("auto".into()), None, None),
            SimilarityChoice::Fixed(SimilarityConfig::Rbf { gamma }) => ("rbf", GammaEcho::Value(gamma), None, None),
            SimilarityChoice::Fixed(SimilarityConfig::Polynomial { c, degree }) => {
                ("poly", GammaEcho::None, Some(c), Some(degree))
            }
        };
        ConfigEcho {
            data: self.data_path.display().to_string(),
            format: self.format.to_string(),
            folds: self.fold_count,
            seed: self.seed,
            sim: kind.to_string(),
            gamma,
            c,
            d,
            decoder: self.decoder,
            sample_fraction: self.sample_fraction.unwrap_or(1.0),
            tuning: matches!(self.similarity, SimilarityChoice::AutoRbf).then(|| self.tuning.clone()),
        }
    }
}

/// A fitted scorer plus decoder over one training set.
pub struct Pipeline<'a> {
    model: SmlModel<'a>,
    decoder: FittedDecoder<'a>,
}

enum FittedDecoder<'a> {
    SetSize(SizeModel<'a>),
    Threshold(ThresholdModel),
}

/// One scored and decoded query.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub scores: ScoreVector,
    pub labels: LabelSet,
}

impl<'a> Pipeline<'a> {
    pub fn fit(train: &'a TrainingSet, similarity: SimilarityConfig, decoder: Decoder) -> Result<Self> {
        let model = SmlModel::fit(train, similarity, None)?;
        let decoder = match decoder {
            Decoder::SetSize => FittedDecoder::SetSize(SizeModel::fit(train, similarity)?),
            Decoder::Threshold => {
                let xs: Vec<&[f64]> = train.instances().iter().map(|i| i.features.as_slice()).collect();
                let rows = model.score_batch(&xs)?;
                let targets: Vec<f64> = rows
                    .iter()
                    .zip(train.instances())
                    .map(|(r, i)| compute_s_target(r, &i.labels))
                    .collect();
                FittedDecoder::Threshold(fit_threshold(&rows, &targets)?)
            }
        };
        Ok(Pipeline { model, decoder })
    }

    pub fn model(&self) -> &SmlModel<'a> {
        &self.model
    }

    pub fn predict_batch<X: AsRef<[f64]> + Sync>(&self, xs: &[X]) -> Result<Vec<Prediction>> {
        let scores = self.model.score_batch(xs)?;
        scores
            .into_par_iter()
            .zip(xs.par_iter())
            .map(|(scores, x)| {
                let labels = match &self.decoder {
                    FittedDecoder::SetSize(sm) => decode_topk(&scores, sm.predict_size(x.as_ref())?)?,
                    FittedDecoder::Threshold(tm) => decode_threshold(&scores, tm)?,
                };
                Ok(Prediction { scores, labels })
            })
            .collect()
    }
}

/// Picks the RBF bandwidth from `plan.gamma_grid` by inner cross-validation
/// on a seeded uniform sample of `data`.
pub fn tune_gamma(data: &TrainingSet, plan: &TuningPlan, seed: u64) -> Result<f64> {
    let scores = tuning_scores(data, plan, seed)?;
    let mut best = 0;
    for i in 1..scores.len() {
        let (g, s) = scores[i];
        let (bg, bs) = scores[best];
        let better = if plan.criterion.higher_is_better() { s > bs } else { s < bs };
        if better || (s == bs && g < bg) {
            best = i;
        }
    }
    Ok(scores[best].0)
}

/// Mean inner-CV criterion for every grid entry, in grid order.
pub fn tuning_scores(data: &TrainingSet, plan: &TuningPlan, seed: u64) -> Result<Vec<(f64, f64)>> {
    plan.validate()?;
    let count = (plan.tuning_fraction * data.len() as f64).ceil() as usize;
    if count < plan.inner_folds {
        return Err(SmlError::TuningSubsetTooSmall {
            available: count,
            required: plan.inner_folds,
        });
    }
    let subset = data.subset(&sample_ids(data.len(), count, seed));
    let folds = FoldPlan::new(subset.len(), plan.inner_folds, seed)?;
    let splits: Vec<(TrainingSet, TrainingSet)> = (0..plan.inner_folds)
        .map(|f| (subset.subset(&folds.train_ids(f)), subset.subset(&folds.test_ids(f))))
        .collect();

    plan.gamma_grid
        .par_iter()
        .map(|&gamma| {
            let mut total = 0.0;
            for (train, test) in &splits {
                let m = evaluate_split(train, test, SimilarityConfig::rbf(gamma), Decoder::SetSize)?.0;
                total += plan.criterion.pick(&m);
            }
            Ok((gamma, total / splits.len() as f64))
        })
        .collect()
}

fn evaluate_split(
    train: &TrainingSet,
    test: &TrainingSet,
    similarity: SimilarityConfig,
    decoder: Decoder,
) -> Result<(FoldMetrics, SkipCounts)> {
    let pipeline = Pipeline::fit(train, similarity, decoder)?;
    let xs: Vec<&[f64]> = test.instances().iter().map(|i| i.features.as_slice()).collect();
    let preds = pipeline.predict_batch(&xs)?;
    let truth: Vec<LabelSet> = test.instances().iter().map(|i| i.labels.clone()).collect();
    let scores: Vec<&[f64]> = preds.iter().map(|p| p.scores.as_slice()).collect();
    let labels: Vec<LabelSet> = preds.iter().map(|p| p.labels.clone()).collect();
    FoldMetrics::evaluate(&scores, &labels, &truth, train.num_labels())
}

/// Everything an `eval` run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: ConfigEcho,
    /// Bandwidth used in each outer fold (empty for polynomial similarity).
    pub fold_gammas: Vec<f64>,
    pub skipped: SkipCounts,
    pub evaluation: EvaluationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaEcho {
    Value(f64),
    Auto(String),
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub data: String,
    pub format: String,
    pub folds: usize,
    pub seed: u64,
    pub sim: String,
    pub gamma: GammaEcho,
    pub c: Option<f64>,
    pub d: Option<u32>,
    pub decoder: Decoder,
    pub sample_fraction: f64,
    pub tuning: Option<TuningPlan>,
}

/// Loads the dataset named in `config`, cross-validates, and writes the
/// report when an output path is configured.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let data = load_dataset(&config.data_path, config.format)?;
    let report = cross_validate(&data, config)?;
    if let Some(path) = &config.out_path {
        emit_report(&report, path, config.out_format)?;
    }
    Ok(report)
}

/// Outer k-fold cross-validation over an in-memory dataset.
pub fn cross_validate(data: &TrainingSet, config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let plan = FoldPlan::new(data.len(), config.fold_count, config.seed)?;

    let results: Vec<(FoldMetrics, SkipCounts, Option<f64>)> = (0..config.fold_count)
        .into_par_iter()
        .map(|fold| {
            run_fold(data, config, &plan, fold).map_err(|e| SmlError::Fold {
                fold: fold + 1,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let per_fold: Vec<FoldMetrics> = results.iter().map(|r| r.0).collect();
    let mut skipped = SkipCounts::default();
    for r in &results {
        skipped.add(&r.1);
    }
    Ok(ExperimentReport {
        config: config.echo(),
        fold_gammas: results.iter().filter_map(|r| r.2).collect(),
        skipped,
        evaluation: aggregate_folds(&per_fold)?,
    })
}

fn run_fold(
    data: &TrainingSet,
    config: &ExperimentConfig,
    plan: &FoldPlan,
    fold: usize,
) -> Result<(FoldMetrics, SkipCounts, Option<f64>)> {
    let train = data.subset(&plan.train_ids(fold));
    let test = data.subset(&plan.test_ids(fold));
    let similarity = match config.similarity {
        SimilarityChoice::Fixed(cfg) => cfg,
        SimilarityChoice::AutoRbf => {
            SimilarityConfig::rbf(tune_gamma(&train, &config.tuning, config.seed.wrapping_add(fold as u64))?)
        }
    };
    let train = match config.sample_fraction {
        Some(f) => Cow::Owned(sample_training(&train, f, config.seed)?),
        None => Cow::Borrowed(&train),
    };
    let (metrics, skipped) = evaluate_split(&train, &test, similarity, config.decoder)?;
    let gamma = match similarity {
        SimilarityConfig::Rbf { gamma } => Some(gamma),
        SimilarityConfig::Polynomial { .. } => None,
    };
    Ok((metrics, skipped, gamma))
}

/// Fixed six-decimal JSON number.
#[derive(Debug, Clone, Copy, PartialEq)]
struct F6(f64);

impl Serialize for F6 {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let raw = serde_json::value::RawValue::from_string(format!("{:.6}", self.0))
            .map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for F6 {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        f64::deserialize(deserializer).map(F6)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonSummary {
    mean: F6,
    std: F6,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonFold {
    fold: usize,
    hamming_loss: F6,
    one_error: F6,
    coverage: F6,
    ranking_loss: F6,
    average_precision: F6,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    gamma: Option<F6>,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonReport {
    config: ConfigEcho,
    hamming_loss: JsonSummary,
    one_error: JsonSummary,
    coverage: JsonSummary,
    ranking_loss: JsonSummary,
    average_precision: JsonSummary,
    per_fold: Vec<JsonFold>,
    skipped: SkipCounts,
}

fn summary_json(s: MetricSummary) -> JsonSummary {
    JsonSummary {
        mean: F6(s.mean),
        std: F6(s.std),
    }
}

fn summary_from_json(s: &JsonSummary) -> MetricSummary {
    MetricSummary {
        mean: s.mean.0,
        std: s.std.0,
    }
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        let e = &self.evaluation;
        let per_fold = e
            .per_fold
            .iter()
            .enumerate()
            .map(|(i, f)| JsonFold {
                fold: i + 1,
                hamming_loss: F6(f.hamming_loss),
                one_error: F6(f.one_error),
                coverage: F6(f.coverage),
                ranking_loss: F6(f.ranking_loss),
                average_precision: F6(f.average_precision),
                gamma: self.fold_gammas.get(i).copied().map(F6),
            })
            .collect();
        let doc = JsonReport {
            config: self.config.clone(),
            hamming_loss: summary_json(e.hamming_loss),
            one_error: summary_json(e.one_error),
            coverage: summary_json(e.coverage),
            ranking_loss: summary_json(e.ranking_loss),
            average_precision: summary_json(e.average_precision),
            per_fold,
            skipped: self.skipped,
        };
        let mut out = serde_json::to_string_pretty(&doc)?;
        out.push('\n');
        Ok(out)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: JsonReport = serde_json::from_str(text)?;
        let per_fold = doc
            .per_fold
            .iter()
            .map(|f| FoldMetrics {
                hamming_loss: f.hamming_loss.0,
                one_error: f.one_error.0,
                coverage: f.coverage.0,
                ranking_loss: f.ranking_loss.0,
                average_precision: f.average_precision.0,
            })
            .collect();
        Ok(ExperimentReport {
            fold_gammas: doc.per_fold.iter().filter_map(|f| f.gamma.map(|g| g.0)).collect(),
            evaluation: EvaluationReport {
                hamming_loss: summary_from_json(&doc.hamming_loss),
                one_error: summary_from_json(&doc.one_error),
                coverage: summary_from_json(&doc.coverage),
                ranking_loss: summary_from_json(&doc.ranking_loss),
                average_precision: summary_from_json(&doc.average_precision),
                per_fold,
            },
            config: doc.config,
            skipped: doc.skipped,
        })
    }

    /// Header, one row per fold, then `mean` and `std` rows. The summary rows
    /// aggregate the fold values exactly as printed.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fold");
        for name in FoldMetrics::NAMES {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        let printed: Vec<[f64; 5]> = self
            .evaluation
            .per_fold
            .iter()
            .map(|f| f.values().map(|v| format!("{v:.6}").parse::<f64>().unwrap_or(v)))
            .collect();
        for (i, row) in printed.iter().enumerate() {
            let _ = write!(out, "{}", i + 1);
            for v in row {
                let _ = write!(out, ",{v:.6}");
            }
            out.push('\n');
        }
        let columns: Vec<MetricSummary> = (0..5)
            .map(|j| MetricSummary::of(&printed.iter().map(|r| r[j]).collect::<Vec<_>>()))
            .collect();
        for (label, pick) in [("mean", 0usize), ("std", 1)] {
            out.push_str(label);
            for s in &columns {
                let v = if pick == 0 { s.mean } else { s.std };
                let _ = write!(out, ",{v:.6}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn emit_report(report: &ExperimentReport, path: impl AsRef<Path>, format: OutputFormat) -> Result<()> {
    let path = path.as_ref();
    let text = match format {
        OutputFormat::Json => report.to_json()?,
        OutputFormat::Csv => report.to_csv(),
    };
    fs::write(path, text).map_err(|source| SmlError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Settings for scoring a separate test file.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictConfig {
    pub format: DataFormat,
    pub seed: u64,
    pub similarity: SimilarityChoice,
    pub decoder: Decoder,
    pub sample_fraction: Option<f64>,
    pub tuning: TuningPlan,
    pub verbose_scores: bool,
}

impl Default for PredictConfig {
    fn default() -> Self {
        PredictConfig {
            format: DataFormat::MultilabelSvm,
            seed: DEFAULT_SEED,
            similarity: SimilarityChoice::AutoRbf,
            decoder: Decoder::SetSize,
            sample_fraction: None,
            tuning: TuningPlan::default(),
            verbose_scores: false,
        }
    }
}

/// Fits on `train` and renders one line per test instance: the predicted
/// label ids (comma-separated, ascending), followed by a tab and the label
/// scores when `verbose_scores` is set.
pub fn predict_lines(train: &TrainingSet, test: &TrainingSet, config: &PredictConfig) -> Result<String> {
    if train.dim() != test.dim() {
        return Err(SmlError::DimensionMismatch {
            expected: train.dim(),
            actual: test.dim(),
        });
    }
    let similarity = match config.similarity {
        SimilarityChoice::Fixed(cfg) => cfg,
        SimilarityChoice::AutoRbf => SimilarityConfig::rbf(tune_gamma(train, &config.tuning, config.seed)?),
    };
    let train = match config.sample_fraction {
        Some(f) => Cow::Owned(sample_training(train, f, config.seed)?),
        None => Cow::Borrowed(train),
    };
    let pipeline = Pipeline::fit(&train, similarity, config.decoder)?;
    let xs: Vec<&[f64]> = test.instances().iter().map(|i| i.features.as_slice()).collect();
    let preds = pipeline.predict_batch(&xs)?;

    let mut out = String::new();
    for p in preds {
        let _ = write!(out, "{}", p.labels);
        if config.verbose_scores {
            out.push('\t');
            for (i, s) in p.scores.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{s}");
            }
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn predict_cli(
    train_path: impl AsRef<Path>,
    test_path: impl AsRef<Path>,
    config: &PredictConfig,
    out: Option<&Path>,
) -> Result<String> {
    let train = load_dataset(train_path, config.format)?;
    let mut test = load_dataset(test_path, config.format)?;
    if config.format == DataFormat::MultilabelSvm && test.dim() < train.dim() {
        test = test.pad_to_dim(train.dim())?;
    }
    let text = predict_lines(&train, &test, config)?;
    if let Some(path) = out {
        fs::write(path, &text).map_err(|source| SmlError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    }
    Ok(text)
}
