// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "tolsig",
    version,
    about = "Time-tolerant precision/recall and permutation significance for anomaly detectors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute STA/LTA anomaly scores for an input series.
    Score(ScoreArgs),
    /// Tabulate tolerant precision and recall over quantiles and tolerances.
    Eval(EvalArgs),
    /// Per-replicate precision and recall curves under permuted events.
    Simulate(SimulateArgs),
    /// Null distributions, p-values and binomial-fit diagnostics for one cell.
    Nulldist(NulldistArgs),
}

#[derive(Debug, Clone, Args)]
pub struct StaLtaArgs {
    /// Short-term window in steps.
    #[arg(long, default_value_t = 3)]
    pub sta: usize,

    /// Long-term window in steps.
    #[arg(long, default_value_t = 14)]
    pub lta: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ScoreArgs {
    /// Input series: rows of (timestamp, value).
    #[arg(long, value_name = "PATH")]
    pub series: PathBuf,

    #[command(flatten)]
    pub sta_lta: StaLtaArgs,

    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
#[group(id = "scoring_input", required = true, multiple = false, args = ["series", "scores"])]
pub struct InputArgs {
    /// Input series to score with STA/LTA.
    #[arg(long, value_name = "PATH")]
    pub series: Option<PathBuf>,

    /// Precomputed scores: rows of (timestamp, score).
    #[arg(long, value_name = "PATH")]
    pub scores: Option<PathBuf>,

    /// Ground-truth event timestamps, one per row.
    #[arg(long, value_name = "PATH")]
    pub events: PathBuf,

    #[command(flatten)]
    pub sta_lta: StaLtaArgs,

    /// Exclude the first lta-1 steps (partial long-term window) from evaluation.
    #[arg(long)]
    pub warmup_mask: bool,

    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SweepAxes {
    /// Quantile levels: comma list, or START:END:COUNT for evenly spaced
    /// levels. Defaults to 0, 0.02, ..., 0.98.
    #[arg(long, value_name = "LIST")]
    pub quantiles: Option<String>,

    /// Tolerances in steps, comma-separated.
    #[arg(long, value_name = "LIST", default_value = "0,1,2,4")]
    pub deltas: String,
}

#[derive(Debug, Clone, Args)]
pub struct PlanArgs {
    /// Number of permutations of the event series.
    #[arg(long, default_value_t = 10_000)]
    pub replicates: usize,

    /// Seed for the permutation generator.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Work chunks for the replicate loop; does not affect results.
    #[arg(long, default_value_t = 64)]
    pub chunks: usize,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub axes: SweepAxes,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub axes: SweepAxes,

    #[command(flatten)]
    pub plan: PlanArgs,

    /// Replicate curves written per file; p-values use every replicate.
    #[arg(long, default_value_t = 100)]
    pub curves: usize,
}

#[derive(Debug, Clone, Args)]
pub struct NulldistArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub plan: PlanArgs,

    /// Tolerance in steps.
    #[arg(long, default_value_t = 2)]
    pub delta: usize,

    /// Threshold quantile level.
    #[arg(long, default_value_t = 0.9)]
    pub quantile: f64,

    /// Only write the null distributions; skip observed counts and p-values.
    #[arg(long)]
    pub null_only: bool,
}
