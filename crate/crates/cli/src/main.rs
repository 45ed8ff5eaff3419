//! `aas`: build alternative answer sets and score predictions with them.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tracing_subscriber::EnvFilter;

use crate::config::BuildFlags;

#[derive(Debug, Parser)]
#[command(
    name = "aas",
    version,
    about = "Alternative answer sets for VQA evaluation"
)]
pub struct Cli {
    /// TOML file supplying defaults for build settings.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Log verbosity (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a GQA or VQA-v2 file into the canonical question file.
    Ingest(IngestArgs),
    /// Build answer sets for every ground truth of a dataset.
    Build(Box<BuildArgs>),
    /// Score predictions by exact match and AAS accuracy.
    Eval(EvalArgs),
    /// AAS accuracy as the set size cap varies.
    Ksweep(KsweepArgs),
    /// Agreement of answer sets with human annotations.
    Iou(IouArgs),
    /// Export soft training targets.
    Augment(AugmentArgs),
    /// Show the premises a label would be scored against.
    Premises(PremisesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Gqa,
    #[value(name = "vqa-v2")]
    VqaV2,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum, default_value = "gqa")]
    pub format: InputFormat,
    /// VQA-v2 questions file, matched to annotations by question id.
    #[arg(long)]
    pub questions: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Question file (GQA shape); falls back to `dataset` in the config file.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Union artifact; per-source artifacts are written beside it.
    #[arg(long)]
    pub out: PathBuf,
    /// Also save every scored pair as a replayable score table.
    #[arg(long)]
    pub record_table: Option<PathBuf>,
    #[command(flatten)]
    pub settings: BuildFlags,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub aas: PathBuf,
    #[arg(long)]
    pub predictions: PathBuf,
    /// JSON report.
    #[arg(long)]
    pub out: PathBuf,
    /// Cut every set to its top k members first.
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct KsweepArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub aas: PathBuf,
    #[arg(long)]
    pub predictions: PathBuf,
    /// CSV of the curve.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub k_min: usize,
    #[arg(long, default_value_t = 10)]
    pub k_max: usize,
}

#[derive(Debug, Args)]
pub struct IouArgs {
    /// One or more artifacts, each reported as a separate method.
    #[arg(long, required = true, num_args = 1..)]
    pub aas: Vec<PathBuf>,
    /// JSON lines of {label, phrase, votes}.
    #[arg(long)]
    pub human: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Uniform,
    Score,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub aas: PathBuf,
    /// One answer per line; the line number is the class index.
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long, value_enum, default_value = "score")]
    pub mode: Mode,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PremisesArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub label: String,
    #[arg(long)]
    pub max_premises: Option<usize>,
    /// Write JSON here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => error::EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let filter =
        EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(&cli.log_level));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("aas: {e}");
            ExitCode::from(e.code)
        }
    }
}
