//! Command-line flags.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use plaqr::penalties::PenaltyFamily;
use plaqr::sim_bench::ErrorModel;
use plaqr::tuning::Criterion;

#[derive(Debug, Parser)]
#[command(name = "plaqr", version, about = "Sparse partially linear additive quantile regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one quantile level at a given or tuned λ.
    Fit(FitArgs),
    /// Fit a λ path and report the criterion at every point.
    Path(PathArgs),
    /// Jointly fit several levels under the group penalty.
    Multifit(MultiArgs),
    /// Run the Monte Carlo benchmark and print its metrics.
    Simulate(SimArgs),
    /// Oracle error against sample size.
    Ratecheck(RateArgs),
    /// Simulated against observed response quantiles.
    Qqdiag(QqArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KnotChoice {
    Uniform,
    Quantile,
}

fn penalty_family(s: &str) -> Result<PenaltyFamily, String> {
    s.parse().map_err(|e: plaqr::Error| e.to_string())
}

fn criterion(s: &str) -> Result<Criterion, String> {
    s.parse().map_err(|e: plaqr::Error| e.to_string())
}

fn error_model(s: &str) -> Result<ErrorModel, String> {
    s.parse().map_err(|e: plaqr::Error| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub response: String,
    /// Comma-separated linear covariate columns.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub linear: Vec<String>,
    /// Comma-separated nonlinear covariate columns, rescaled to [0, 1].
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub nonlinear: Vec<String>,
    /// Spline order (degree + 1).
    #[arg(long, default_value_t = 4)]
    pub order: usize,
    /// Internal knots per coordinate; defaults to ⌊n^{1/5}⌋.
    #[arg(long)]
    pub knots: Option<usize>,
    #[arg(long, value_enum, default_value_t = KnotChoice::Quantile)]
    pub knot_rule: KnotChoice,
}

#[derive(Debug, Clone, Args)]
pub struct PenaltyArgs {
    #[arg(long, default_value = "scad", value_parser = penalty_family)]
    pub penalty: PenaltyFamily,
    /// Penalty shape; 3.7 for SCAD and 3 for MCP when omitted.
    #[arg(long)]
    pub a: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct TuneArgs {
    /// Number of log-spaced λ values below λ_max.
    #[arg(long, default_value_t = 50)]
    pub auto_grid: usize,
    #[arg(long, default_value = "qbic", value_parser = criterion)]
    pub criterion: Criterion,
    /// Seed for cross-validation folds and simulation draws.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Stop the path once more linear covariates than this are selected.
    #[arg(long)]
    pub max_active: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    /// Fit at this λ instead of tuning over a grid.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[command(flatten)]
    pub tune: TuneArgs,
    #[arg(long, default_value_t = 100)]
    pub max_lla_iters: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PathArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    #[command(flatten)]
    pub tune: TuneArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct MultiArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Comma-separated quantile levels.
    #[arg(long, value_delimiter = ',', required = true)]
    pub taus: Vec<f64>,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[command(flatten)]
    pub tune: TuneArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    #[arg(long, default_value_t = 300)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub p: usize,
    #[arg(long, default_value = "gaussian", value_parser = error_model)]
    pub error: ErrorModel,
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    /// Run the group-penalized comparison at these levels instead.
    #[arg(long, value_delimiter = ',')]
    pub taus: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    pub reps: usize,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    #[command(flatten)]
    pub tune: TuneArgs,
    #[arg(long, default_value_t = 3)]
    pub order: usize,
    #[arg(long, default_value_t = 0)]
    pub knots: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct RateArgs {
    #[arg(long, value_delimiter = ',', default_value = "200,400,800,1600")]
    pub ns: Vec<usize>,
    #[arg(long, default_value_t = 27)]
    pub p: usize,
    #[arg(long, default_value = "gaussian", value_parser = error_model)]
    pub error: ErrorModel,
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    #[arg(long, default_value_t = 50)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub order: usize,
    /// Use ⌊n^{1/5}⌋ internal knots at each sample size.
    #[arg(long)]
    pub grow_knots: bool,
    #[arg(long, default_value_t = 0)]
    pub knots: usize,
    /// Zero-coefficient columns added to the oracle set.
    #[arg(long, default_value_t = 0)]
    pub extra_nulls: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct QqArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Fitted levels; nine deciles when omitted.
    #[arg(long, value_delimiter = ',')]
    pub taus: Vec<f64>,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    #[command(flatten)]
    pub tune: TuneArgs,
    #[arg(long, default_value_t = 10_000)]
    pub draws: usize,
    #[command(flatten)]
    pub out: OutArgs,
}
