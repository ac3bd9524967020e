//! `camsep`: every pipeline stage as a subcommand.
//!
//! Results go to standard output as one JSON document; progress goes to
//! standard error as JSON lines. Exit status: 0 success, 1 usage error,
//! 2 data or validation error, 3 solver did not converge.

mod commands;
mod config;
mod heatmap;
mod logger;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use camsep_core::combine::{OverlapPolicy, RenormPolicy};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Core(camsep_core::Error),
    NotConverged,
}

impl From<camsep_core::Error> for CliError {
    fn from(e: camsep_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if !e.is_data_error() => 1,
            CliError::Data(_) | CliError::Core(_) => 2,
            CliError::NotConverged => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::NotConverged => f.write_str("solver did not converge"),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "camsep", version, about = "Separate and recombine camera motion in temporal attention maps")]
pub struct Cli {
    /// TOML config with [scenario], [solver], [cluster], [io] and [combine] sections.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print the effective configuration as JSON and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
    /// Worker threads for data-parallel stages.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "info", value_parser = parse_level)]
    pub log_level: log::Level,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a synthetic scenario and write frames, masks and attention.
    GenSynth(GenSynthArgs),
    /// Fill the masked region of an attention map by Laplace completion.
    PoissonComplete(PoissonArgs),
    /// Estimate the shared camera motion of several attention maps.
    ExtractFewShot(FewShotArgs),
    /// Weighted sum of attention maps.
    Combine(CombineArgs),
    /// Assign attention maps to mask regions.
    ComposeRegions(ComposeArgs),
    /// Apply attention to values, optionally keeping target values in a mask.
    Apply(ApplyArgs),
    /// Distances between two attention maps.
    Metrics(MetricsArgs),
    /// Export a grayscale heatmap of one pixel or one entry slice.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct GenSynthArgs {
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PoissonArgs {
    #[arg(long)]
    pub attn: Option<PathBuf>,
    /// Mask, or a per-frame mask stack that is merged first.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FewShotArgs {
    #[arg(long)]
    pub attn: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub min_pts: Option<usize>,
    #[arg(long)]
    pub perplexity: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CombineArgs {
    #[arg(long)]
    pub attn: Vec<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub weight: Vec<f64>,
    #[arg(long, value_parser = parse_renorm)]
    pub policy: Option<RenormPolicy>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ComposeArgs {
    /// `<mask>:<attention>`, one per region.
    #[arg(long)]
    pub pair: Vec<String>,
    #[arg(long, value_parser = parse_overlap)]
    pub policy: Option<OverlapPolicy>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ApplyArgs {
    #[arg(long)]
    pub attn: Option<PathBuf>,
    #[arg(long)]
    pub values: Option<PathBuf>,
    /// Region that keeps `--target-values`.
    #[arg(long, requires = "target_values")]
    pub preserve_mask: Option<PathBuf>,
    #[arg(long, requires = "preserve_mask")]
    pub target_values: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub a: Option<PathBuf>,
    #[arg(long)]
    pub b: Option<PathBuf>,
    #[arg(long)]
    pub mask: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub attn: Option<PathBuf>,
    /// `x,y`: the t x t matrix of one pixel.
    #[arg(long, value_parser = parse_pair, required_unless_present = "slice", conflicts_with = "slice")]
    pub pixel: Option<(usize, usize)>,
    /// `i,j`: entry (i, j) over the whole canvas.
    #[arg(long, value_parser = parse_pair)]
    pub slice: Option<(usize, usize)>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected two integers as a,b")?;
    let a = a.trim().parse().map_err(|e| format!("{a}: {e}"))?;
    let b = b.trim().parse().map_err(|e| format!("{b}: {e}"))?;
    Ok((a, b))
}

fn parse_level(s: &str) -> Result<log::Level, String> {
    s.parse().map_err(|_| format!("unknown log level {s:?}"))
}

fn parse_renorm(s: &str) -> Result<RenormPolicy, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_")))
        .map_err(|_| format!("unknown policy {s:?} (strict, renormalize_rows, none)"))
}

fn parse_overlap(s: &str) -> Result<OverlapPolicy, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_")))
        .map_err(|_| format!("unknown policy {s:?} (require_partition, sum_then_renormalize)"))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => config::RunConfig::load(path)?,
        None => config::RunConfig::default(),
    };
    let job = move || commands::dispatch(cli.command, cfg, cli.print_config);
    match cli.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?
            .install(job),
        None => job(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    logger::init(cli.log_level);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
