//! Command-line front end: `generate`, `train`, `infer`, `anomaly` and
//! `benchmark`.
//!
//! Exit codes: 0 success, 1 file system failure, 2 usage, 3 data or label
//! problem, 4 parse failure, 5 dimension mismatch. Diagnostics go to stderr;
//! results go to files.

pub mod files;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::error::Error;
use crate::evaluation::{run_benchmark, BenchmarkConfig, Method};
use crate::inference::InferenceMode;
use crate::learning::{fit_supervised, fit_unsupervised, LabeledSequence, TrainingCorpus, UnsupervisedConfig};
use crate::synth::{generate, ToyConfig};
use files::{load_model, read_sequence, save_model, write_csv, write_json, DEFAULT_LABEL_COLUMN};

pub const EXIT_IO: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_PARSE: u8 = 4;
pub const EXIT_SHAPE: u8 = 5;

#[derive(Debug, Parser)]
#[command(name = "drhmm", version, about = "Density-ratio hidden Markov models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a switching noisy-sine sequence and its sliding windows.
    Generate(GenerateArgs),
    /// Fit a model from labeled or unlabeled sequences.
    Train(TrainArgs),
    /// Decode per-frame states.
    Infer(InferArgs),
    /// Score frames by how far they fall outside the training support.
    Anomaly(AnomalyArgs),
    /// Compare DR-HMM, KDE-HMM and GMM-HMM on generated data.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Output directory; receives sequence.csv, windows.csv and metadata.json.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub length: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub window: Option<u64>,
    #[arg(long)]
    pub noise_std: Option<f64>,
    /// JSON generator settings; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Sequence CSV; repeat for several sequences.
    #[arg(long, required = true)]
    pub data: Vec<PathBuf>,
    #[arg(long, default_value = DEFAULT_LABEL_COLUMN)]
    pub labels_column: String,
    /// Number of states; inferred from the labels when supervised.
    #[arg(long)]
    pub states: Option<usize>,
    #[arg(long)]
    pub unsupervised: bool,
    #[arg(long)]
    pub out_model: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub max_centers: Option<usize>,
    /// JSON learning settings; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Filter,
    Smooth,
    Independent,
}

impl From<ModeArg> for InferenceMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Filter => InferenceMode::Filter,
            ModeArg::Smooth => InferenceMode::Smooth,
            ModeArg::Independent => InferenceMode::Independent,
        }
    }
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "smooth")]
    pub mode: ModeArg,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the per-state probabilities.
    #[arg(long)]
    pub emit_probs: bool,
    /// Column ignored as an observation if present.
    #[arg(long, default_value = DEFAULT_LABEL_COLUMN)]
    pub labels_column: String,
}

#[derive(Debug, Args)]
pub struct AnomalyArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = DEFAULT_LABEL_COLUMN)]
    pub labels_column: String,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Training windows per regime, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub runs: Option<usize>,
    /// Any of drhmm, kdehmm, gmmhmm, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    pub methods: Option<Vec<Method>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub test_length: Option<usize>,
    /// Receives runs.csv and summary.json.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// JSON benchmark settings; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io(_) => EXIT_IO,
            Error::InvalidParameter { .. } => EXIT_USAGE,
            Error::Parse(_) => EXIT_PARSE,
            Error::DimensionMismatch { .. } => EXIT_SHAPE,
            Error::EmptyInput(_)
            | Error::MissingClass { .. }
            | Error::DegenerateData
            | Error::SingularSystem(_)
            | Error::Unnormalizable { .. }
            | Error::NonFinite(_)
            | Error::Data(_) => EXIT_DATA,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

fn with_path(path: &Path) -> impl FnOnce(Error) -> CliError + '_ {
    move |e| {
        let mut err = CliError::from(e);
        err.message = format!("{}: {}", path.display(), err.message);
        err
    }
}

fn read_config<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path).map_err(|e| with_path(path)(e.into()))?;
    serde_json::from_str(&text).map_err(|e| CliError {
        code: EXIT_PARSE,
        message: format!("{}: {e}", path.display()),
    })
}

fn ensure_dir(dir: &Path) -> CliResult {
    fs::create_dir_all(dir).map_err(|e| with_path(dir)(e.into()))
}

fn version_record() -> serde_json::Value {
    json!({ "package": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") })
}

fn sidecar(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(OsString::from).unwrap_or_default();
    name.push(".meta.json");
    out.with_file_name(name)
}

fn write_meta<T: Serialize>(path: &Path, value: &T) -> CliResult {
    write_json(path, value).map_err(with_path(path))
}

fn cmd_generate(args: &GenerateArgs) -> CliResult {
    let mut config: ToyConfig = read_config(args.config.as_deref())?;
    if let Some(v) = args.length {
        config.length = v;
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if let Some(v) = args.window {
        config.window = v as usize;
    }
    if let Some(v) = args.noise_std {
        config.noise_std = v;
    }
    let seq = generate(&config)?;
    ensure_dir(&args.out)?;
    let d = config.window;

    let seq_path = args.out.join("sequence.csv");
    let header = ["frame", "y", "state"].map(String::from);
    let rows = seq
        .series
        .iter()
        .zip(&seq.states)
        .enumerate()
        .map(|(t, (y, x))| vec![(t + 1).to_string(), y.to_string(), (x + 1).to_string()]);
    write_csv(&seq_path, &header, rows).map_err(with_path(&seq_path))?;

    let win_path = args.out.join("windows.csv");
    let mut header = vec!["frame".to_string()];
    header.extend((1..=d).map(|k| format!("y{k}")));
    header.push("state".into());
    let rows = seq.windows.iter().zip(&seq.window_states).enumerate().map(|(k, (w, x))| {
        let mut row = vec![(k + d).to_string()];
        row.extend(w.iter().map(f64::to_string));
        row.push((x + 1).to_string());
        row
    });
    write_csv(&win_path, &header, rows).map_err(with_path(&win_path))?;

    write_meta(
        &args.out.join("metadata.json"),
        &json!({ "command": "generate", "build": version_record(), "config": config }),
    )
}

fn cmd_train(args: &TrainArgs) -> CliResult {
    let mut config: UnsupervisedConfig = read_config(args.config.as_deref())?;
    if let Some(v) = args.seed {
        config.learning.seed = v;
    }
    if let Some(v) = args.folds {
        config.learning.folds = v;
    }
    if let Some(v) = args.max_centers {
        config.learning.max_centers = v;
    }
    let mut sequences = Vec::with_capacity(args.data.len());
    for path in &args.data {
        let data = read_sequence(path, &args.labels_column).map_err(with_path(path))?;
        let seq = if args.unsupervised {
            LabeledSequence::unlabeled(data.observations)
        } else {
            let labels = data.labels.ok_or_else(|| CliError {
                code: EXIT_DATA,
                message: format!("{}: no `{}` column for supervised training", path.display(), args.labels_column),
            })?;
            if let Some(s) = args.states {
                if let Some(&bad) = labels.iter().find(|&&l| l >= s) {
                    return Err(CliError {
                        code: EXIT_DATA,
                        message: format!("{}: state {} exceeds --states {s}", path.display(), bad + 1),
                    });
                }
            }
            LabeledSequence::labeled(data.observations, labels)?
        };
        sequences.push(seq);
    }
    let corpus = TrainingCorpus::new(sequences)?;
    let model = if args.unsupervised {
        let s = args
            .states
            .ok_or_else(|| CliError::usage("--states is required with --unsupervised"))?;
        fit_unsupervised(&corpus, s, &config)?
    } else {
        let inferred = corpus
            .sequences()
            .iter()
            .flat_map(|s| s.labels.iter().flatten())
            .max()
            .map_or(0, |&m| m + 1);
        fit_supervised(&corpus, args.states.unwrap_or(inferred), &config.learning)?
    };
    save_model(&args.out_model, &model).map_err(with_path(&args.out_model))
}

fn load_inputs(model: &Path, data: &Path, labels_column: &str) -> CliResult<(crate::learning::FittedDrHmm, files::SequenceData)> {
    let fitted = load_model(model).map_err(with_path(model))?;
    let seq = read_sequence(data, labels_column).map_err(with_path(data))?;
    let got = seq.observations[0].len();
    if got != fitted.dim() {
        return Err(CliError {
            code: EXIT_SHAPE,
            message: format!(
                "{}: observations have {got} columns but the model expects d_y = {}",
                data.display(),
                fitted.dim()
            ),
        });
    }
    Ok((fitted, seq))
}

fn cmd_infer(args: &InferArgs) -> CliResult {
    let (model, seq) = load_inputs(&args.model, &args.data, &args.labels_column)?;
    let mode = InferenceMode::from(args.mode);
    let probs = model.posteriors(&seq.observations, mode)?;
    let states = crate::inference::map_decode(&probs);
    let mut header = vec!["frame".to_string(), "state".to_string()];
    if args.emit_probs {
        header.extend((1..=model.num_states()).map(|i| format!("p{i}")));
    }
    let rows = seq.frames.iter().zip(&states).enumerate().map(|(t, (frame, x))| {
        let mut row = vec![frame.to_string(), (x + 1).to_string()];
        if args.emit_probs {
            row.extend(probs.row(t).iter().map(f64::to_string));
        }
        row
    });
    write_csv(&args.out, &header, rows).map_err(with_path(&args.out))?;
    write_meta(
        &sidecar(&args.out),
        &json!({
            "command": "infer",
            "build": version_record(),
            "mode": format!("{:?}", args.mode).to_lowercase(),
            "model": args.model,
            "data": args.data,
            "model_metadata": model.metadata,
        }),
    )
}

fn cmd_anomaly(args: &AnomalyArgs) -> CliResult {
    let (model, seq) = load_inputs(&args.model, &args.data, &args.labels_column)?;
    let scores = model.outlier_scores(&seq.observations)?;
    let header = ["frame", "score"].map(String::from);
    let rows = seq.frames.iter().zip(&scores).map(|(f, s)| vec![f.to_string(), s.to_string()]);
    write_csv(&args.out, &header, rows).map_err(with_path(&args.out))?;
    write_meta(
        &sidecar(&args.out),
        &json!({
            "command": "anomaly",
            "build": version_record(),
            "model": args.model,
            "data": args.data,
            "model_metadata": model.metadata,
        }),
    )
}

fn cmd_benchmark(args: &BenchmarkArgs) -> CliResult {
    let mut config: BenchmarkConfig = read_config(args.config.as_deref())?;
    if let Some(v) = &args.sizes {
        config.sizes = v.clone();
    }
    if let Some(v) = args.runs {
        config.runs = v;
    }
    if let Some(v) = &args.methods {
        config.methods = v.clone();
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if let Some(v) = args.test_length {
        config.test_length = v;
    }
    config.validate()?;
    ensure_dir(&args.out_dir)?;
    let result = run_benchmark(&config)?;
    for f in &result.failures {
        eprintln!(
            "warning: {} failed at size {} run {} (seed {}): {}",
            f.method, f.size, f.run, f.seed, f.message
        );
    }
    let runs_path = args.out_dir.join("runs.csv");
    let header = ["method", "size", "run", "seed", "train_hash", "smoothing", "filtering", "independent"].map(String::from);
    let rows = result.rows.iter().map(|r| {
        vec![
            r.method.to_string(),
            r.size.to_string(),
            (r.run + 1).to_string(),
            r.seed.to_string(),
            format!("{:016x}", r.train_hash),
            r.smoothing.to_string(),
            r.filtering.to_string(),
            r.independent.to_string(),
        ]
    });
    write_csv(&runs_path, &header, rows).map_err(with_path(&runs_path))?;
    write_meta(
        &args.out_dir.join("summary.json"),
        &json!({
            "command": "benchmark",
            "build": version_record(),
            "config": result.config,
            "cells": result.cells,
            "failures": result.failures,
        }),
    )
}

pub fn run(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Train(a) => cmd_train(a),
        Command::Infer(a) => cmd_infer(a),
        Command::Anomaly(a) => cmd_anomaly(a),
        Command::Benchmark(a) => cmd_benchmark(a),
    }
}

/// Parse `args`, run, report any failure on stderr and return the exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
