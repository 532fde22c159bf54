//! `dpjl` command-line harness.

pub mod bench;
pub mod commands;
pub mod error;
pub mod io;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dpjl::transforms::TransformKind;

pub use error::{CliError, CliResult};

/// Environment variable that overrides `--seed` when set.
pub const SEED_ENV: &str = "DPJL_SEED";

#[derive(Debug, Parser)]
#[command(name = "dpjl", version, about = "Differentially private JL sketches")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derive dimensions and write a transform descriptor.
    GenTransform(GenTransformArgs),
    /// Privatize an input vector into a sketch file.
    Sketch(SketchArgs),
    /// Estimate the squared distance between two sketches.
    Estimate(EstimateArgs),
    /// Monte-Carlo variance benchmark across schemes and deltas.
    BenchVariance(BenchVarianceArgs),
    /// Time the three transforms on dense and sparse inputs.
    BenchTime(BenchTimeArgs),
    /// Exhaustively enumerate a tiny SJLT and compare with the closed forms.
    OracleCheck(OracleCheckArgs),
}

#[derive(Debug, Args)]
pub struct GenTransformArgs {
    #[arg(long = "type", value_parser = parse_kind)]
    pub kind: TransformKind,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long, default_value_t = dpjl::transforms::DEFAULT_C_K)]
    pub c_k: f64,
    #[arg(long, default_value_t = dpjl::transforms::DEFAULT_C_S)]
    pub c_s: f64,
    #[arg(long, default_value_t = dpjl::transforms::DEFAULT_C_Q)]
    pub c_q: f64,
    /// SJLT hashing: `prf` or `poly:T` for T-wise independent polynomials.
    #[arg(long, default_value = "prf")]
    pub hash: String,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MechanismArg {
    Auto,
    Laplace,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SiteArg {
    Output,
    Input,
}

#[derive(Debug, Args)]
pub struct SketchArgs {
    #[arg(long)]
    pub transform: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t = SiteArg::Output)]
    pub site: SiteArg,
    #[arg(long, value_enum, default_value_t = MechanismArg::Auto)]
    pub mechanism: MechanismArg,
    /// Input-perturbation sigma; defaults to the calibration floor.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the sketch with zero noise. Not private; for debugging only.
    #[arg(long)]
    pub debug_zero_noise: bool,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    /// Print the CSV header line before the row.
    #[arg(long)]
    pub header: bool,
}

#[derive(Debug, Args)]
pub struct BenchVarianceArgs {
    /// Comma-separated `transform:mechanism` pairs, e.g.
    /// `sjlt:laplace,sjlt:gaussian,iid:gaussian,fjlt-out:auto,fjlt-in:gaussian`.
    #[arg(long, default_value = "sjlt:laplace,sjlt:gaussian")]
    pub schemes: String,
    #[arg(long, default_value_t = 100.0)]
    pub dist_sq: f64,
    #[arg(long, default_value = "1e-2,1e-3,1e-4,1e-5,1e-6")]
    pub delta_grid: String,
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
    #[arg(long, default_value_t = 18)]
    pub k: usize,
    #[arg(long, default_value_t = 9)]
    pub s: usize,
    /// FJLT failure probability, which sets its sparsity q.
    #[arg(long, default_value_t = 0.1)]
    pub beta: f64,
    #[arg(long, default_value_t = dpjl::transforms::DEFAULT_C_Q)]
    pub c_q: f64,
    /// Leave the wall-time column empty so output is byte-reproducible.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Args)]
pub struct BenchTimeArgs {
    #[arg(long, default_value_t = 8192)]
    pub dim: usize,
    #[arg(long, default_value_t = 512)]
    pub k: usize,
    #[arg(long, default_value = "1,2,4,8,16")]
    pub sparsity_grid: String,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.25)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    pub beta: f64,
    /// Non-zeros in the sparse input.
    #[arg(long, default_value_t = 1)]
    pub nnz: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Args)]
pub struct OracleCheckArgs {
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 1)]
    pub s: usize,
    /// Comma-separated input vector; all ones when omitted.
    #[arg(long)]
    pub x: Option<String>,
    /// Fold in noise moments: `laplace:B` or `gaussian:SIGMA`.
    #[arg(long)]
    pub noise: Option<String>,
}

fn parse_kind(s: &str) -> Result<TransformKind, String> {
    s.parse().map_err(|e: dpjl::Error| e.to_string())
}

/// `DPJL_SEED` when set, otherwise the flag value.
pub fn resolve_seed(flag: u64) -> CliResult<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|e| CliError::Usage(format!("{SEED_ENV}={v:?}: {e}"))),
        Err(_) => Ok(flag),
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::GenTransform(a) => commands::gen_transform(&a),
        Command::Sketch(a) => commands::sketch(&a),
        Command::Estimate(a) => commands::estimate(&a),
        Command::BenchVariance(a) => bench::cmd_bench_variance(&a),
        Command::BenchTime(a) => bench::cmd_bench_time(&a),
        Command::OracleCheck(a) => commands::oracle_check(&a),
    }
}
