//! `actlogic`: command-line front end for constraint-aware active learning.
//!
//! Subcommands: `run` one experiment to a metrics CSV, `compare` several
//! methods under one seed, `validate` a dataset against a constraint file,
//! and `synth` bundled synthetic datasets. Exit codes: 0 success, 1
//! configuration or usage error, 2 runtime failure.

mod charts;
mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unknown names, missing files: exit 1.
    Config(String),
    /// The work itself failed: exit 2.
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => m,
        }
    }
}

pub type CliResult = Result<(), CliError>;

#[derive(Parser)]
#[command(
    name = "actlogic",
    version,
    about = "Pool-based active learning with propagation over label constraints"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its metrics CSV.
    Run(RunArgs),
    /// Run several methods with one seed and split; write combined CSV + SVGs.
    Compare(CompareArgs),
    /// Check a dataset against a constraint file and summarize both.
    Validate(ValidateArgs),
    /// Write a bundled synthetic dataset as a sparse feature/label pair.
    Synth(SynthArgs),
    /// Spot-check probability-score rankings against exact information gain.
    #[command(hide = true)]
    OracleCheck(OracleCheckArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum Format {
    /// One `<class> <idx>:<val>...` line per instance, classes one-hot.
    Libsvm,
    /// Two files: `<id> <idx>:<val>...` features plus `<id> <label> <0|1>` rows.
    Sparse,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Libsvm => "libsvm",
            Format::Sparse => "sparse",
        }
    }
}

#[derive(Args)]
pub struct DataArgs {
    /// Feature file (libsvm line format or sparse feature file).
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Dataset layout.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Label file for the sparse format.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Constraint configuration (JSON).
    #[arg(long)]
    constraints: Option<PathBuf>,
}

#[derive(Args)]
pub struct KnobArgs {
    /// Selection strategy; see `run --help` for the catalog.
    #[arg(long)]
    method: Option<String>,
    /// Labels requested per iteration (propagated fixes are free).
    #[arg(long = "per-iter")]
    per_iter: Option<usize>,
    /// Iteration cap.
    #[arg(long = "max-iters")]
    max_iters: Option<usize>,
    /// Average-AUC stopping target.
    #[arg(long = "target-auc")]
    target_auc: Option<f64>,
    /// Instances whose labels are known up front (default: one fifth).
    #[arg(long = "train-count")]
    train_count: Option<usize>,
    /// Root seed for the split, selection, and training streams.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
pub struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    knobs: KnobArgs,
    /// Metrics CSV destination.
    #[arg(long)]
    out: PathBuf,
    /// Config JSON: read as a baseline if present, overridden by flags,
    /// rewritten with the fully resolved values.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
pub struct CompareArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Selection strategy; repeat the flag for each method (at least two).
    #[arg(long = "method")]
    methods: Vec<String>,
    #[arg(long = "per-iter")]
    per_iter: Option<usize>,
    #[arg(long = "max-iters")]
    max_iters: Option<usize>,
    #[arg(long = "target-auc")]
    target_auc: Option<f64>,
    #[arg(long = "train-count")]
    train_count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Combined CSV destination; `<stem>_auc.svg` and `<stem>_iters.svg`
    /// land next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SynthProfile {
    /// 13-label taxonomy with mutual exclusion and subsumption.
    Nell13,
    /// 7 one-hot Gaussian clusters, 19 features.
    Segment,
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    profile: SynthProfile,
    /// Instances to generate.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output prefix: writes `<out>.features` and `<out>.labels`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct OracleCheckArgs {
    /// Mutual-exclusion group size.
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// `ACTLOGIC_THREADS` caps the rayon worker pool before any work starts.
fn init_threads() -> CliResult {
    let Ok(raw) = std::env::var("ACTLOGIC_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .parse()
        .ok()
        .filter(|&t| t >= 1)
        .ok_or_else(|| {
            CliError::Config(format!(
                "ACTLOGIC_THREADS must be a positive integer, got `{raw}`"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let ok = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if ok { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    let outcome = init_threads().and_then(|()| match cli.command {
        Command::Run(args) => commands::cmd_run(args),
        Command::Compare(args) => commands::cmd_compare(args),
        Command::Validate(args) => commands::cmd_validate(args),
        Command::Synth(args) => commands::cmd_synth(args),
        Command::OracleCheck(args) => commands::cmd_oracle_check(args),
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
