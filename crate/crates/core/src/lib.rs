// SPDX-License-Identifier: Apache-2.0

//! Evaluation of point-based anomaly detectors on sequential data.
//!
//! The crate is organised bottom-up:
//!
//! * [`seqdata`] reads series and event files onto a gap-free integer grid.
//! * [`scoring`] turns an input series into anomaly scores (STA/LTA).
//! * [`toleval`] thresholds scores and builds the two relaxed confusion
//!   matrices from which time-tolerant precision and recall are read.
//! * [`significance`] permutes the ground truth to simulate null
//!   distributions of both true-positive counts, with Monte Carlo p-values
//!   and binomial-fit diagnostics.
//!
//! Replicate loops and sweep cells run on rayon when the `parallel` feature
//! is enabled (the default) and sequentially otherwise. Results are
//! identical either way.

#![forbid(unsafe_code)]

pub mod error;
pub mod format;
mod par;
pub mod scoring;
pub mod seqdata;
pub mod significance;
pub mod toleval;

pub use error::{Error, Result};
pub use scoring::{sliding_mean, sta_lta_score, ScoreSeries, StaLtaConfig};
pub use seqdata::{load_events, load_series, EventSeries, InputSeries, TimeGrid, Timestamp};
pub use significance::{
    binomial_cdf, binomial_fit_diagnostics, ecdf, mc_pvalue, permute_events, replicate_rng,
    simulate_null, simulate_sweep, FitDiagnostics, NullDistribution, NullPair, PermutationPlan,
    SimulatedSweep,
};
pub use toleval::{
    confusion_ground_tolerant, confusion_prediction_tolerant, dilate, precision_tolerant, predict,
    recall_tolerant, resolve_threshold, sweep, MeasureTable, PredictionSeries, Side, SweepCell,
    SweepResult, Threshold, Tolerance, TolerantConfusionMatrix,
};

/// Returns `true` when the crate was built with rayon support.
pub const fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}
