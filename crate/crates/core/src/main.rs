use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sml::harness::{
    emit_report, predict_cli, run_experiment, Criterion, Decoder, ExperimentConfig, OutputFormat, PredictConfig,
    SimilarityChoice, TuningPlan,
};
use sml::similarity::{DEFAULT_POLY_C, DEFAULT_POLY_DEGREE};
use sml::{DataFormat, SimilarityConfig, SmlError};

#[derive(Parser)]
#[command(name = "sml", version, about = "Similarity-based multi-label learning")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cross-validate on one dataset and write a metric report.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "out-format", default_value = "json")]
        out_format: String,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Fit on a training file and predict label sets for a test file.
    Predict {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Append the per-label scores to every output line.
        #[arg(long = "verbose-scores")]
        verbose_scores: bool,
        #[command(flatten)]
        model: ModelArgs,
    },
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, default_value = "multilabel-svm")]
    format: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// rbf or poly
    #[arg(long, default_value = "rbf")]
    sim: String,
    /// RBF bandwidth, or `auto` to tune it by inner cross-validation.
    #[arg(long, default_value = "auto")]
    gamma: String,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    d: Option<u32>,
    #[arg(long, default_value = "setsize")]
    decoder: String,
    /// Fraction of the training set to keep, in (0, 1].
    #[arg(long)]
    sample: Option<f64>,
    /// Comma-separated gamma grid for `--gamma auto`.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long = "inner-folds", default_value_t = 5)]
    inner_folds: usize,
    #[arg(long = "tune-fraction", default_value_t = 0.10)]
    tune_fraction: f64,
    #[arg(long, default_value = "average_precision")]
    criterion: String,
}

impl ModelArgs {
    fn similarity(&self) -> Result<SimilarityChoice, SmlError> {
        match self.sim.as_str() {
            "rbf" => match self.gamma.as_str() {
                "auto" => Ok(SimilarityChoice::AutoRbf),
                g => g
                    .parse::<f64>()
                    .map(|gamma| SimilarityChoice::Fixed(SimilarityConfig::rbf(gamma)))
                    .map_err(|_| SmlError::InvalidConfig(format!("bad --gamma '{g}'"))),
            },
            "poly" => Ok(SimilarityChoice::Fixed(SimilarityConfig::polynomial(
                self.c.unwrap_or(DEFAULT_POLY_C),
                self.d.unwrap_or(DEFAULT_POLY_DEGREE),
            ))),
            other => Err(SmlError::InvalidConfig(format!("unknown --sim '{other}'"))),
        }
    }

    fn tuning(&self) -> Result<TuningPlan, SmlError> {
        let gamma_grid = match &self.grid {
            Some(g) => g
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| SmlError::InvalidConfig(format!("bad --grid entry '{v}'")))
                })
                .collect::<Result<Vec<_>, _>>()?,
            None => TuningPlan::default().gamma_grid,
        };
        Ok(TuningPlan {
            gamma_grid,
            inner_folds: self.inner_folds,
            tuning_fraction: self.tune_fraction,
            criterion: self.criterion.parse::<Criterion>()?,
        })
    }
}

fn run(cli: Cli) -> Result<(), SmlError> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| SmlError::InvalidConfig(format!("cannot start {n} workers: {e}")))?;
    }
    match cli.command {
        Command::Eval {
            data,
            folds,
            out,
            out_format,
            model,
        } => {
            let config = ExperimentConfig {
                data_path: data,
                format: model.format.parse::<DataFormat>()?,
                fold_count: folds,
                seed: model.seed,
                similarity: model.similarity()?,
                decoder: model.decoder.parse::<Decoder>()?,
                sample_fraction: model.sample,
                tuning: model.tuning()?,
                out_path: None,
                out_format: out_format.parse::<OutputFormat>()?,
            };
            let report = run_experiment(&config)?;
            match out {
                Some(path) => emit_report(&report, path, config.out_format)?,
                None => match config.out_format {
                    OutputFormat::Json => print!("{}", report.to_json()?),
                    OutputFormat::Csv => print!("{}", report.to_csv()),
                },
            }
        }
        Command::Predict {
            train,
            test,
            out,
            verbose_scores,
            model,
        } => {
            let config = PredictConfig {
                format: model.format.parse::<DataFormat>()?,
                seed: model.seed,
                similarity: model.similarity()?,
                decoder: model.decoder.parse::<Decoder>()?,
                sample_fraction: model.sample,
                tuning: model.tuning()?,
                verbose_scores,
            };
            let text = predict_cli(&train, &test, &config, out.as_deref())?;
            if out.is_none() {
                print!("{text}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
