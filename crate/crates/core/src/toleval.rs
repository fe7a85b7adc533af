// SPDX-License-Identifier: Apache-2.0

//! Thresholding, temporal dilation and the two relaxed confusion matrices.
//!
//! Precision and recall with temporal tolerance `δ` come from two different
//! matrices over the same `T` steps:
//!
//! * [`Side::GroundTolerant`]: the event series is dilated by `δ` and
//!   compared with the raw predictions. Its true positives (predicted steps
//!   with an event within `δ`) over all predictions give the precision.
//! * [`Side::PredictionTolerant`]: the predictions are dilated and compared
//!   with the raw events. Its true positives (event steps with a prediction
//!   within `δ`) over all events give the recall.
//!
//! Each matrix carries its side, and [`precision_tolerant`] and
//! [`recall_tolerant`] refuse the wrong one.

use std::fmt;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::format;
use crate::par;
use crate::scoring::ScoreSeries;
use crate::seqdata::{EventSeries, TimeGrid};

/// Detection threshold, either an absolute score or a quantile level of the
/// scores.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Threshold {
    Absolute(f64),
    Quantile(f64),
}

impl Threshold {
    pub fn quantile(level: f64) -> Result<Self> {
        check_level(level)?;
        Ok(Threshold::Quantile(level))
    }
}

fn check_level(level: f64) -> Result<()> {
    if (0.0..=1.0).contains(&level) {
        Ok(())
    } else {
        Err(Error::config(format!(
            "quantile level {level} outside [0, 1]"
        )))
    }
}

/// Temporal tolerance in grid steps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tolerance(pub usize);

impl Tolerance {
    pub fn steps(self) -> usize {
        self.0
    }
}

impl fmt::Display for Tolerance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// 1-based rank of the nearest-rank quantile of `n` values at `level`.
///
/// `ceil(level * n)` with a relative guard so that products such as
/// `0.7 * 10 = 7.000000000000001` are not pushed up a rank. Level 0 maps to
/// rank 1 (the minimum).
pub(crate) fn nearest_rank(level: f64, n: usize) -> usize {
    let x = level * n as f64;
    let k = (x - x * 4.0 * f64::EPSILON).ceil() as usize;
    k.clamp(1, n)
}

/// Absolute threshold implied by `threshold` on `scores`.
pub fn resolve_threshold(scores: &ScoreSeries, threshold: Threshold) -> Result<f64> {
    match threshold {
        Threshold::Absolute(tau) => Ok(tau),
        Threshold::Quantile(level) => {
            check_level(level)?;
            let mut sorted = scores.scores().to_vec();
            sorted.sort_by(f64::total_cmp);
            Ok(sorted[nearest_rank(level, sorted.len()) - 1])
        }
    }
}

/// Binary predictions `I(z_t >= τ)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredictionSeries {
    grid: TimeGrid,
    flags: Vec<bool>,
    count: usize,
}

impl PredictionSeries {
    pub fn new(grid: TimeGrid, flags: Vec<bool>) -> Result<Self> {
        if flags.len() != grid.len() {
            return Err(Error::Alignment(format!(
                "{} predictions for a grid of {} steps",
                flags.len(),
                grid.len()
            )));
        }
        let count = flags.iter().filter(|&&f| f).count();
        Ok(Self { grid, flags, count })
    }

    pub fn from_flags(flags: Vec<bool>) -> Result<Self> {
        Self::new(TimeGrid::indexed(flags.len())?, flags)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    /// Number of predicted anomalies.
    pub fn count(&self) -> usize {
        self.count
    }
}

/// Flags every step whose score reaches `tau` (inclusive).
pub fn predict(scores: &ScoreSeries, tau: f64) -> PredictionSeries {
    let flags: Vec<bool> = scores.scores().iter().map(|&z| z >= tau).collect();
    PredictionSeries::new(*scores.grid(), flags).expect("same length as grid")
}

/// Windowed OR over `[t - δ, t + δ]`, zero-padded at both ends.
pub fn dilate(flags: &[bool], delta: Tolerance) -> Vec<bool> {
    let mut out = Vec::new();
    dilate_into(flags, delta, &mut out);
    out
}

/// [`dilate`] into a reusable buffer.
pub(crate) fn dilate_into(flags: &[bool], delta: Tolerance, out: &mut Vec<bool>) {
    let d = delta.0;
    out.clear();
    out.resize(flags.len(), false);
    if d == 0 {
        out.copy_from_slice(flags);
        return;
    }
    let mut last: Option<usize> = None;
    for (t, &f) in flags.iter().enumerate() {
        if f {
            last = Some(t);
        }
        out[t] = last.is_some_and(|l| t - l <= d);
    }
    let mut next: Option<usize> = None;
    for t in (0..flags.len()).rev() {
        if flags[t] {
            next = Some(t);
        }
        if next.is_some_and(|n| n - t <= d) {
            out[t] = true;
        }
    }
}

/// Which series carries the tolerance in a relaxed confusion matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    /// Events dilated; true positives count predicted steps (precision).
    GroundTolerant,
    /// Predictions dilated; true positives count event steps (recall).
    PredictionTolerant,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::GroundTolerant => "ground_tolerant",
            Side::PredictionTolerant => "prediction_tolerant",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ground_tolerant" => Ok(Side::GroundTolerant),
            "prediction_tolerant" => Ok(Side::PredictionTolerant),
            other => Err(Error::config(format!("unknown matrix side {other:?}"))),
        }
    }
}

/// 2×2 partition of all grid steps with one side dilated by `delta`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TolerantConfusionMatrix {
    pub side: Side,
    pub delta: Tolerance,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
}

impl TolerantConfusionMatrix {
    fn tally(side: Side, delta: Tolerance, actual: &[bool], predicted: &[bool]) -> Self {
        let mut m = TolerantConfusionMatrix {
            side,
            delta,
            true_positives: 0,
            false_positives: 0,
            false_negatives: 0,
            true_negatives: 0,
        };
        for (&a, &p) in actual.iter().zip(predicted) {
            match (a, p) {
                (true, true) => m.true_positives += 1,
                (false, true) => m.false_positives += 1,
                (true, false) => m.false_negatives += 1,
                (false, false) => m.true_negatives += 1,
            }
        }
        m
    }

    /// Number of grid steps, `tp + fp + fn + tn`.
    pub fn total(&self) -> usize {
        self.true_positives + self.false_positives + self.false_negatives + self.true_negatives
    }

    /// Row marginal `tp + fp`.
    pub fn predicted_positives(&self) -> usize {
        self.true_positives + self.false_positives
    }

    /// Column marginal `tp + fn`.
    pub fn actual_positives(&self) -> usize {
        self.true_positives + self.false_negatives
    }
}

/// Confusion matrix with tolerance in the ground truth.
pub fn confusion_ground_tolerant(
    events: &EventSeries,
    preds: &PredictionSeries,
    delta: Tolerance,
) -> Result<TolerantConfusionMatrix> {
    events.grid().ensure_same(preds.grid())?;
    let dilated = dilate(events.flags(), delta);
    Ok(TolerantConfusionMatrix::tally(
        Side::GroundTolerant,
        delta,
        &dilated,
        preds.flags(),
    ))
}

/// Confusion matrix with tolerance in the predictions.
pub fn confusion_prediction_tolerant(
    events: &EventSeries,
    preds: &PredictionSeries,
    delta: Tolerance,
) -> Result<TolerantConfusionMatrix> {
    events.grid().ensure_same(preds.grid())?;
    let dilated = dilate(preds.flags(), delta);
    Ok(TolerantConfusionMatrix::tally(
        Side::PredictionTolerant,
        delta,
        events.flags(),
        &dilated,
    ))
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Tolerant precision `P_δ`; `None` when nothing was predicted.
pub fn precision_tolerant(matrix: &TolerantConfusionMatrix) -> Result<Option<f64>> {
    if matrix.side != Side::GroundTolerant {
        return Err(Error::Usage(format!(
            "precision needs the ground_tolerant matrix, got {}",
            matrix.side
        )));
    }
    Ok(ratio(matrix.true_positives, matrix.predicted_positives()))
}

/// Tolerant recall `R_δ`; `None` when there are no events.
pub fn recall_tolerant(matrix: &TolerantConfusionMatrix) -> Result<Option<f64>> {
    if matrix.side != Side::PredictionTolerant {
        return Err(Error::Usage(format!(
            "recall needs the prediction_tolerant matrix, got {}",
            matrix.side
        )));
    }
    Ok(ratio(matrix.true_positives, matrix.actual_positives()))
}

/// One `(quantile, δ)` cell of a sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepCell {
    pub quantile: f64,
    pub tau: f64,
    pub delta: Tolerance,
    pub ground: TolerantConfusionMatrix,
    pub prediction: TolerantConfusionMatrix,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

/// Precision and recall over a grid of quantile levels and tolerances.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    quantiles: Vec<f64>,
    deltas: Vec<Tolerance>,
    cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn quantiles(&self) -> &[f64] {
        &self.quantiles
    }

    pub fn deltas(&self) -> &[Tolerance] {
        &self.deltas
    }

    /// All cells, quantile-major.
    pub fn cells(&self) -> &[SweepCell] {
        &self.cells
    }

    pub fn cell(&self, quantile_index: usize, delta_index: usize) -> &SweepCell {
        &self.cells[quantile_index * self.deltas.len() + delta_index]
    }

    pub fn recall_table(&self) -> MeasureTable {
        self.table(|c| c.recall)
    }

    pub fn precision_table(&self) -> MeasureTable {
        self.table(|c| c.precision)
    }

    fn table(&self, pick: impl Fn(&SweepCell) -> Option<f64>) -> MeasureTable {
        let rows = self
            .quantiles
            .iter()
            .enumerate()
            .map(|(qi, &q)| {
                let values = (0..self.deltas.len())
                    .map(|di| pick(self.cell(qi, di)))
                    .collect();
                (q, values)
            })
            .collect();
        MeasureTable {
            deltas: self.deltas.clone(),
            rows,
        }
    }
}

/// Validates sweep axes.
pub(crate) fn check_axes(quantiles: &[f64], deltas: &[Tolerance]) -> Result<()> {
    if quantiles.is_empty() {
        return Err(Error::config("quantile list is empty"));
    }
    if deltas.is_empty() {
        return Err(Error::config("tolerance list is empty"));
    }
    quantiles.iter().try_for_each(|&q| check_level(q))
}

/// Absolute thresholds for every quantile level, from one sort.
pub(crate) fn quantile_thresholds(scores: &ScoreSeries, quantiles: &[f64]) -> Vec<f64> {
    let mut sorted = scores.scores().to_vec();
    sorted.sort_by(f64::total_cmp);
    quantiles
        .iter()
        .map(|&q| sorted[nearest_rank(q, sorted.len()) - 1])
        .collect()
}

/// Evaluates both measures for every `(quantile, δ)` pair.
pub fn sweep(
    events: &EventSeries,
    scores: &ScoreSeries,
    quantiles: &[f64],
    deltas: &[Tolerance],
) -> Result<SweepResult> {
    check_axes(quantiles, deltas)?;
    events.grid().ensure_same(scores.grid())?;

    let taus = quantile_thresholds(scores, quantiles);
    let dilated_events: Vec<Vec<bool>> =
        deltas.iter().map(|&d| dilate(events.flags(), d)).collect();
    let width = deltas.len();
    let n_cells = quantiles.len() * width;

    let cells = par::map_ranges(n_cells, n_cells, |range| {
        range
            .map(|i| {
                let (qi, di) = (i / width, i % width);
                let delta = deltas[di];
                let preds = predict(scores, taus[qi]);
                let ground = TolerantConfusionMatrix::tally(
                    Side::GroundTolerant,
                    delta,
                    &dilated_events[di],
                    preds.flags(),
                );
                let prediction = TolerantConfusionMatrix::tally(
                    Side::PredictionTolerant,
                    delta,
                    events.flags(),
                    &dilate(preds.flags(), delta),
                );
                SweepCell {
                    quantile: quantiles[qi],
                    tau: taus[qi],
                    delta,
                    precision: ratio(ground.true_positives, ground.predicted_positives()),
                    recall: ratio(prediction.true_positives, prediction.actual_positives()),
                    ground,
                    prediction,
                }
            })
            .collect()
    });

    Ok(SweepResult {
        quantiles: quantiles.to_vec(),
        deltas: deltas.to_vec(),
        cells,
    })
}

/// A measure tabulated by quantile (rows) and tolerance (columns).
///
/// Serialised as tab-separated text: a `#` header naming the columns, then
/// one row per quantile with the level followed by one value per `δ`.
/// Undefined values are written as `nan`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureTable {
    pub deltas: Vec<Tolerance>,
    pub rows: Vec<(f64, Vec<Option<f64>>)>,
}

impl MeasureTable {
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "# quantile")?;
        for d in &self.deltas {
            write!(out, "\tdelta={d}")?;
        }
        writeln!(out)?;
        for (q, values) in &self.rows {
            write!(out, "{}", format::real(*q))?;
            for v in values {
                write!(out, "\t{}", format::measure(*v))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn parse<R: BufRead>(reader: R) -> Result<MeasureTable> {
        let mut deltas = None;
        let mut rows = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::parse(i + 1, e.to_string()))?;
            let line = line.trim();
            if let Some(header) = line.strip_prefix('#') {
                if deltas.is_none() {
                    deltas = Some(parse_header(header, i + 1)?);
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let q = fields
                .next()
                .and_then(|f| f.parse::<f64>().ok())
                .ok_or_else(|| Error::parse(i + 1, "invalid quantile"))?;
            let values = fields
                .map(|f| {
                    format::parse_measure(f).ok_or_else(|| Error::parse(i + 1, "invalid value"))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push((q, values));
        }
        let deltas = deltas.ok_or_else(|| Error::parse(1, "missing header"))?;
        if let Some((_, v)) = rows.iter().find(|(_, v)| v.len() != deltas.len()) {
            return Err(Error::parse(
                0,
                format!(
                    "row with {} values for {} tolerances",
                    v.len(),
                    deltas.len()
                ),
            ));
        }
        Ok(MeasureTable { deltas, rows })
    }
}

fn parse_header(header: &str, line: usize) -> Result<Vec<Tolerance>> {
    header
        .split('\t')
        .skip(1)
        .map(|col| {
            col.trim()
                .strip_prefix("delta=")
                .and_then(|d| d.parse().ok())
                .map(Tolerance)
                .ok_or_else(|| Error::parse(line, format!("invalid column {col:?}")))
        })
        .collect()
}
