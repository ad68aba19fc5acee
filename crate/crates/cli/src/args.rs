use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use hyperk::{HeaderMode, InitStrategy, MetricSet, NormalizeScheme, DEFAULT_TAU};

#[derive(Debug, Parser)]
#[command(
    name = "hyperk",
    version,
    about = "Estimate the number of K-Means clusters from mean cluster-hypersphere density"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a Gaussian blob dataset as CSV.
    Gen(GenArgs),
    /// Sweep K and write TSV, JSON and optionally SVG outputs.
    Sweep(SweepArgs),
    /// Sweep K and print the estimated number of clusters.
    Estimate(SweepArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub points: usize,
    #[arg(long, default_value_t = 2)]
    pub dims: usize,
    #[arg(long)]
    pub centers: usize,
    /// Standard deviation of the per-feature Gaussian noise.
    #[arg(long, default_value_t = 0.5)]
    pub spread: f64,
    /// Lower bound of the interval center coordinates are drawn from.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub box_lo: f64,
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    pub box_hi: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub k_min: usize,
    /// Defaults to min(25, m / 2).
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 300)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// random or kmeanspp.
    #[arg(long, default_value = "random")]
    pub init: InitStrategy,
    /// minmax, zscore or none.
    #[arg(long, default_value = "minmax")]
    pub normalize: NormalizeScheme,
    /// Comma-separated subset of density,silhouette,wss,gap.
    #[arg(long, default_value = "density,silhouette,wss,gap")]
    pub metrics: MetricSet,
    /// Number of uniform reference datasets for the gap statistic.
    #[arg(long, default_value_t = 10)]
    pub gap_b: usize,
    /// Header name of a label column to ignore.
    #[arg(long)]
    pub drop_label_column: Option<String>,
    /// auto, present or absent.
    #[arg(long, default_value = "auto", value_parser = parse_header)]
    pub header: HeaderMode,
    /// Relative-drop threshold for the elbow region.
    #[arg(long, default_value_t = DEFAULT_TAU)]
    pub tau: f64,
    /// Also write PREFIX.svg.
    #[arg(long)]
    pub plot: bool,
    /// Output prefix for PREFIX.tsv, PREFIX.json and PREFIX.svg.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_header(s: &str) -> Result<HeaderMode, String> {
    match s {
        "auto" => Ok(HeaderMode::Auto),
        "present" | "yes" => Ok(HeaderMode::Present),
        "absent" | "no" => Ok(HeaderMode::Absent),
        other => Err(format!(
            "unknown header mode {other:?} (expected auto, present or absent)"
        )),
    }
}
