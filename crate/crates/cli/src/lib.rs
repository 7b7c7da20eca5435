//! Command-line front end: instance generation, single-instance runs,
//! population dynamics, exact oracles and seeded parameter sweeps.

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
pub mod grid;
pub mod output;
pub mod sweep;

pub use sweep::{emit_plotdata, read_rows, run_sweep, summarize, SweepKind, SweepResult, SweepRow, SweepSpec, SweepSummary};

/// Version tag written into every CSV row and JSON document.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "ksat", version, about = "Message passing experiments on random 3-SAT")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random 3-SAT formula in DIMACS format.
    Gen(GenArgs),
    /// Run belief propagation and report the Bethe entropy.
    Bp(BpArgs),
    /// Run survey propagation and report the complexity.
    Sp(SpArgs),
    /// Solve with survey-inspired decimation.
    Sid(SidArgs),
    /// Population dynamics on the random-tree ensemble.
    Popdyn(PopdynArgs),
    /// Exact model count and cluster decomposition of a small formula.
    Oracle(OracleArgs),
    /// Run a grid of (alpha, replicate) cells.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Message-passing settings shared by `bp`, `sp`, `sid` and `sweep`.
/// Unset values keep the algorithm's own default.
#[derive(Debug, Args, Clone, Default)]
pub struct IterArgs {
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub damping: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Jacobi sweeps on all cores instead of sequential updates.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, Args)]
pub struct BpArgs {
    #[arg(long)]
    pub cnf: PathBuf,
    #[command(flatten)]
    pub iter: IterArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Result JSON; stdout when absent.
    #[arg(long)]
    pub json_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpArgs {
    #[arg(long)]
    pub cnf: PathBuf,
    #[command(flatten)]
    pub iter: IterArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub json_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Selection {
    /// Smallest estimated complexity loss first.
    MinDelta,
    /// Most polarized variable first.
    MaxBias,
}

/// Decimation settings shared by `sid` and `sweep`.
#[derive(Debug, Args, Clone, Default)]
pub struct DecimationArgs {
    /// Fraction of unassigned variables fixed per SP solve.
    #[arg(long)]
    pub batch_fraction: Option<f64>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long, value_enum)]
    pub selection: Option<Selection>,
}

#[derive(Debug, Args)]
pub struct SidArgs {
    #[arg(long)]
    pub cnf: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub decimation: DecimationArgs,
    #[command(flatten)]
    pub iter: IterArgs,
    /// Per-fix trace as CSV.
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
    #[arg(long)]
    pub json_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Mode {
    Bp,
    Sp,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Threshold {
    AlphaC,
    AlphaD,
    AlphaB,
    AlphaU,
}

#[derive(Debug, Args)]
pub struct PopdynArgs {
    #[arg(long, value_enum, default_value_t = Mode::Sp)]
    pub mode: Mode,
    #[arg(long, conflicts_with_all = ["scan", "find"])]
    pub alpha: Option<f64>,
    /// Grid `lo:hi:step`.
    #[arg(long, conflicts_with = "find")]
    pub scan: Option<String>,
    /// Locate a threshold by bisection instead of measuring.
    #[arg(long, value_enum)]
    pub find: Option<Threshold>,
    /// Bisection bracket `lo:hi`; defaults depend on the threshold.
    #[arg(long, requires = "find")]
    pub bracket: Option<String>,
    #[arg(long, requires = "find")]
    pub width: Option<f64>,
    #[arg(long)]
    pub pop_size: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub measure_sweeps: Option<usize>,
    #[arg(long)]
    pub batches: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub csv_out: Option<PathBuf>,
    #[arg(long)]
    pub json_out: Option<PathBuf>,
    /// Final population of a single-alpha run.
    #[arg(long, requires = "alpha")]
    pub checkpoint_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub cnf: PathBuf,
    /// Also split the solutions into clusters.
    #[arg(long)]
    pub clusters: bool,
    /// Hamming radius joining solutions of one cluster.
    #[arg(long, default_value_t = 1)]
    pub radius: usize,
    #[arg(long)]
    pub json_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub kind: SweepKind,
    /// Grid `lo:hi:step` or a single value.
    #[arg(long)]
    pub alpha: String,
    #[arg(long)]
    pub n: usize,
    /// Replicates per alpha.
    #[arg(long, default_value_t = 1)]
    pub seeds: usize,
    #[arg(long, default_value_t = 0)]
    pub base_seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long)]
    pub csv_out: Option<PathBuf>,
    /// Summary JSON; stdout when absent.
    #[arg(long)]
    pub json_out: Option<PathBuf>,
    /// Directory for per-observable `alpha mean yerr` files.
    #[arg(long)]
    pub plotdata_dir: Option<PathBuf>,
    #[command(flatten)]
    pub iter: IterArgs,
    #[command(flatten)]
    pub decimation: DecimationArgs,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Bp(a) => commands::bp(a),
        Command::Sp(a) => commands::sp(a),
        Command::Sid(a) => commands::sid(a),
        Command::Popdyn(a) => commands::popdyn(a),
        Command::Oracle(a) => commands::oracle(a),
        Command::Sweep(a) => commands::sweep(a),
    }
}
