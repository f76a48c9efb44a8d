//! Command-line driver for the `ddb-shadow` library.
//!
//! Every subcommand writes its artifacts into `--out DIR` and finishes with
//! a `manifest.json` naming each output file with its size and SHA-256.
//! The manifest is written last, so its presence implies every listed file
//! is complete. Runs are deterministic for a fixed seed and `--workers`
//! value; the seed comes from `--seed`, else `$DDB_SHADOW_SEED`, else 0.
//!
//! Exit codes: 0 success, 2 flag/usage errors, 3 file parse errors,
//! 4 violated numeric invariants (non-density inputs, bound violations,
//! dimension mismatches between inputs).

mod commands;
mod inputs;
mod manifest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use ddb_shadow::Error;

#[derive(Parser)]
#[command(name = "ddb-shadow", version, about = "Dense-dual-bases shadow estimation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate tr(rho O) from randomized snapshot measurements.
    Estimate(EstimateArgs),
    /// Audit per-shot variance bounds over sampled states.
    Variance(VarianceArgs),
    /// Proportion of sampled states within deviation thresholds, per qubit count.
    Fig1(Fig1Args),
    /// Estimate a stabilizer-state expectation through the block reduction.
    Stabilizer(StabilizerArgs),
    /// Timing tables: per-shot post-processing, block reduction, dense oracle.
    Bench(BenchArgs),
}

/// Flags shared by every subcommand.
#[derive(Args, Serialize)]
struct CommonArgs {
    /// Output directory; created if missing.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,

    /// RNG seed; defaults to $DDB_SHADOW_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads for parallel sections; 0 uses the global pool.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Args, Serialize)]
struct EstimateArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Hilbert space dimension.
    #[arg(long)]
    dim: usize,

    /// State family: maximally-mixed | haar | hs | rho-a | file.
    #[arg(long, default_value = "maximally-mixed")]
    state: String,

    /// Density matrix JSON, required with --state file.
    #[arg(long, value_name = "FILE")]
    state_file: Option<PathBuf>,

    /// Off-diagonal magnitude cap for --state rho-a.
    #[arg(long, default_value_t = 1.0)]
    rho_a_bound: f64,

    /// Observable JSON (upper triangle).
    #[arg(long, value_name = "FILE")]
    observable: PathBuf,

    /// Measurement shots.
    #[arg(long, default_value_t = 10_000)]
    shots: usize,

    /// Aggregation strategy: mean | median-of-means.
    #[arg(long, default_value = "mean")]
    strategy: String,

    /// Batch count for median-of-means.
    #[arg(long, default_value_t = 1)]
    batches: usize,

    /// Cross-check against the dense oracle tr(rho O) and report the gap.
    #[arg(long)]
    oracle: bool,

    /// Persist the measurement record (shadow.bin + shadow.csv).
    #[arg(long)]
    keep_log: bool,
}

#[derive(Args, Serialize)]
struct VarianceArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Hilbert space dimension; must match the observable file.
    #[arg(long)]
    dim: usize,

    /// Observable JSON (upper triangle).
    #[arg(long, value_name = "FILE")]
    observable: PathBuf,

    /// Number of random states to audit.
    #[arg(long, default_value_t = 50)]
    states: usize,

    /// State family for the audit: haar | hs.
    #[arg(long, default_value = "haar")]
    family: String,

    /// Also write worst_case.csv: exact variance of the canonical
    /// two-level superposition pair at doubling dimensions up to --dim.
    #[arg(long)]
    worst_case_demo: bool,
}

#[derive(Args, Serialize)]
struct Fig1Args {
    #[command(flatten)]
    common: CommonArgs,

    /// Inclusive qubit range, e.g. 2..8 (also accepts 2..=8 or a single n).
    #[arg(long, default_value = "2..8")]
    n_range: String,

    /// Random states per qubit count.
    #[arg(long, default_value_t = 1000)]
    trials: usize,

    /// Comma-separated thresholds, e.g. 4,2n,n^2.
    #[arg(long, default_value = "4,2n,n^2")]
    thresholds: String,

    /// State family: haar | hs.
    #[arg(long, default_value = "haar")]
    family: String,
}

#[derive(Args, Serialize)]
struct StabilizerArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Total qubit count (required unless --state supplies it).
    #[arg(long, required_unless_present = "state")]
    n: Option<usize>,

    /// Support rank of the sampled state (required unless --state supplies it).
    #[arg(long, required_unless_present = "state")]
    r: Option<usize>,

    /// Stabilizer state JSON; omitted means a random state of rank --r.
    #[arg(long, value_name = "FILE")]
    state: Option<PathBuf>,

    /// Observable JSON (upper triangle) of dimension 2^n.
    #[arg(long, value_name = "FILE")]
    observable: PathBuf,

    /// Target additive accuracy for the planned shot budget.
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,

    /// Target failure probability for the planned shot budget.
    #[arg(long, default_value_t = 0.05)]
    sigma: f64,

    /// Diagonal-correction handling: neglect | exact | bound-report.
    #[arg(long, default_value = "exact")]
    l2_mode: String,

    /// Overrides the planned shot budget with a fixed shot count.
    #[arg(long)]
    shots: Option<usize>,

    /// Batch count when --shots is given (1 = plain mean).
    #[arg(long, default_value_t = 1)]
    batches: usize,

    /// Blocks of rank <= this are summed exactly instead of sampled.
    #[arg(long, default_value_t = 10)]
    r_direct: usize,
}

#[derive(Args, Serialize)]
struct BenchArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Comma-separated dimensions for the per-shot and dense-oracle tables.
    #[arg(long, default_value = "16,64,256,1024")]
    dims: String,

    /// Snapshots per timing pass of the per-shot table.
    #[arg(long, default_value_t = 1_000_000)]
    shots: usize,

    /// Timing passes per row; the best is reported.
    #[arg(long, default_value_t = 3)]
    repeats: usize,
}

/// Exit-code taxonomy, fixed for scriptability: flag-level problems are 2,
/// unreadable/undecodable inputs are 3, inputs that decode but break a
/// numeric invariant are 4.
fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidParameter { .. }
        | Error::DimensionOutOfRange { .. }
        | Error::QubitCapExceeded { .. } => 2,
        Error::Malformed(_) | Error::Json(_) | Error::Io(_) | Error::ShadowFraming { .. } => 3,
        _ => 4,
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Estimate(args) => commands::estimate::run(args),
        Command::Variance(args) => commands::variance::run(args),
        Command::Fig1(args) => commands::fig1::run(args),
        Command::Stabilizer(args) => commands::stabilizer::run(args),
        Command::Bench(args) => commands::bench::run(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(exit_code(&err));
    }
}
