// SPDX-License-Identifier: Apache-2.0

//! Anomaly scores computed from an input series.
//!
//! The built-in score is the STA/LTA energy transient ratio
//! `z_t = STA_t / (LTA_t + 1)` over trailing windows that include step `t`.
//! Steps before a window fills use the mean of the available prefix.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::seqdata::{check_values, InputSeries, TimeGrid};

/// Anomaly scores, one per grid step.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreSeries {
    grid: TimeGrid,
    scores: Vec<f64>,
}

impl ScoreSeries {
    pub fn new(grid: TimeGrid, scores: Vec<f64>) -> Result<Self> {
        check_values(&grid, &scores)?;
        Ok(Self { grid, scores })
    }

    /// Scores on the integer grid `0..scores.len()`.
    pub fn from_values(scores: Vec<f64>) -> Result<Self> {
        Self::new(TimeGrid::indexed(scores.len())?, scores)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn slice(&self, range: Range<usize>) -> Result<ScoreSeries> {
        let grid = self.grid.slice(range.clone())?;
        ScoreSeries::new(grid, self.scores[range].to_vec())
    }
}

impl From<InputSeries> for ScoreSeries {
    /// Treats precomputed values as scores.
    fn from(series: InputSeries) -> Self {
        let grid = *series.grid();
        ScoreSeries {
            grid,
            scores: series.into_values(),
        }
    }
}

/// Window lengths of the STA/LTA ratio, in grid steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StaLtaConfig {
    sta_window: usize,
    lta_window: usize,
}

impl StaLtaConfig {
    pub fn new(sta_window: usize, lta_window: usize) -> Result<Self> {
        if sta_window == 0 || lta_window == 0 {
            return Err(Error::config("STA/LTA windows must be at least one step"));
        }
        if sta_window > lta_window {
            return Err(Error::config(format!(
                "short-term window ({sta_window}) exceeds long-term window ({lta_window})"
            )));
        }
        Ok(Self {
            sta_window,
            lta_window,
        })
    }

    pub fn sta_window(&self) -> usize {
        self.sta_window
    }

    pub fn lta_window(&self) -> usize {
        self.lta_window
    }

    /// Number of leading steps whose long-term window is only partially
    /// filled.
    pub fn warmup(&self) -> usize {
        self.lta_window - 1
    }
}

impl Default for StaLtaConfig {
    fn default() -> Self {
        Self {
            sta_window: 3,
            lta_window: 14,
        }
    }
}

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Trailing mean over `window` steps including the current one; the first
/// `window - 1` outputs average the available prefix.
pub fn sliding_mean(values: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::config("sliding window must be at least one step"));
    }
    let mut acc = CompensatedSum::default();
    let mut out = Vec::with_capacity(values.len());
    for (t, &x) in values.iter().enumerate() {
        acc.add(x);
        if t >= window {
            acc.add(-values[t - window]);
        }
        let n = (t + 1).min(window);
        out.push(acc.value() / n as f64);
    }
    Ok(out)
}

/// STA/LTA energy transient score of `series`.
pub fn sta_lta_score(series: &InputSeries, config: StaLtaConfig) -> Result<ScoreSeries> {
    let sta = sliding_mean(series.values(), config.sta_window)?;
    let lta = sliding_mean(series.values(), config.lta_window)?;
    let scores = sta.iter().zip(&lta).map(|(s, l)| s / (l + 1.0)).collect();
    ScoreSeries::new(*series.grid(), scores)
}
