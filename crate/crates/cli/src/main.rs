//! Command-line front end for the beat classification pipeline.
//!
//! Every command reads files, writes files, and exits: 0 on success, 1 when
//! a run fails midway, 2 when the invocation or configuration is wrong. With
//! a fixed seed every command is deterministic down to the output bytes.

mod commands;
mod config;
mod csvio;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Failures split by exit code: bad invocations exit 2, failed runs exit 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl<E: std::error::Error + Send + Sync + 'static> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Runtime(e.into())
    }
}

pub fn usage(message: impl Into<String>) -> CliError {
    CliError::Usage(message.into())
}

pub type CmdResult = Result<(), CliError>;

#[derive(Parser)]
#[command(
    name = "ecgonn",
    about = "Inter-patient ECG beat classification pipeline",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by the commands that read a run configuration.
#[derive(Args, Debug, Clone)]
struct ConfigArgs {
    /// JSON run configuration; defaults apply where absent.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override every stage seed with one number.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Directory to write the generated corpus into.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Overwrite an occupied output directory.
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug)]
struct IngestArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Archive directory; falls back to the config, then ECGONN_DATA_DIR.
    #[arg(long, value_name = "DIR")]
    data_dir: Option<PathBuf>,
    /// Write the manifest here instead of standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Overwrite an existing manifest file.
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug)]
struct PreprocessArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Archive directory; falls back to the config, then ECGONN_DATA_DIR.
    #[arg(long, value_name = "DIR")]
    data_dir: Option<PathBuf>,
    /// Directory to write packed beat sets and the dataset manifest into.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Use the split the synthetic corpus in the data directory declares.
    #[arg(long)]
    synthetic: bool,
    /// Overwrite an occupied output directory.
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug)]
struct AugmentArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Archive directory; falls back to the config, then ECGONN_DATA_DIR.
    #[arg(long, value_name = "DIR")]
    data_dir: Option<PathBuf>,
    /// Use the split the synthetic corpus in the data directory declares.
    #[arg(long)]
    synthetic: bool,
    /// Write the rebalance report here instead of standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Overwrite an existing report file.
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Preprocessed dataset directory (not needed with --dry-run).
    #[arg(long, value_name = "DIR")]
    data_dir: Option<PathBuf>,
    /// Run directory to create (not needed with --dry-run).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Build the model, print its parameter count, and exit.
    #[arg(long)]
    dry_run: bool,
    /// Patient-wise 5-fold cross-validation instead of a single full run.
    #[arg(long)]
    cv: bool,
    /// Overwrite an occupied run directory.
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Checkpoint manifest to evaluate against the dataset's held-out half.
    #[arg(long, value_name = "FILE", conflicts_with = "confusion")]
    checkpoint: Option<PathBuf>,
    /// Preprocessed dataset directory (required with --checkpoint).
    #[arg(long, value_name = "DIR")]
    data_dir: Option<PathBuf>,
    /// Score a bare 3x3 confusion matrix CSV; no model, no data.
    #[arg(long, value_name = "FILE")]
    confusion: Option<PathBuf>,
    /// Directory for metrics files; printed only when absent.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overwrite an occupied output directory.
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug)]
struct PredictArgs {
    /// Checkpoint manifest holding the model and its input statistics.
    #[arg(long, value_name = "FILE")]
    checkpoint: PathBuf,
    /// Record name inside the data directory.
    #[arg(long, value_name = "NAME")]
    record: String,
    /// Archive directory; falls back to ECGONN_DATA_DIR.
    #[arg(long, value_name = "DIR")]
    data_dir: Option<PathBuf>,
    /// CSV of R-peak sample indices, replacing the record's annotations.
    #[arg(long, value_name = "FILE")]
    peaks: Option<PathBuf>,
    /// Write predictions here instead of standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Overwrite an existing output file.
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Run directory to summarize.
    #[arg(long, value_name = "DIR")]
    run: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a small self-labeled corpus in the archive format.
    Synth(SynthArgs),
    /// Scan an archive directory and tally its usable beats.
    Ingest(IngestArgs),
    /// Cut, rebalance, and transform records into packed beat sets.
    Preprocess(PreprocessArgs),
    /// Report what rare-class rebalancing would add, without writing beats.
    Augment(AugmentArgs),
    /// Train the classifier on a preprocessed dataset.
    Train(TrainArgs),
    /// Score a checkpoint on held-out beats, or a bare confusion matrix.
    Evaluate(EvaluateArgs),
    /// Label every beat of one record with a trained checkpoint.
    Predict(PredictArgs),
    /// Summarize a finished run directory.
    Report(ReportArgs),
}

fn run() -> CmdResult {
    match Cli::parse().command {
        Command::Synth(args) => commands::synth(args),
        Command::Ingest(args) => commands::ingest(args),
        Command::Preprocess(args) => commands::preprocess(args),
        Command::Augment(args) => commands::augment(args),
        Command::Train(args) => commands::train(args),
        Command::Evaluate(args) => commands::evaluate(args),
        Command::Predict(args) => commands::predict(args),
        Command::Report(args) => commands::report(args),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(error)) => {
            eprintln!("error: {error:#}");
            ExitCode::from(1)
        }
    }
}
