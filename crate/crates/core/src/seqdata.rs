// SPDX-License-Identifier: Apache-2.0

//! Ingestion and alignment of series and event files on a common time grid.
//!
//! Files are plain text with one row per line. Fields are separated by
//! commas when the line contains one, otherwise by whitespace. Blank lines
//! and lines starting with `#` are skipped. Timestamps are either
//! non-negative integers or `YYYY-MM-DD` dates, never both in one file.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use chrono::{Days, NaiveDate};

use crate::error::{Error, Result};

const DATE_FORMAT: &str = "%Y-%m-%d";

/// A point on a time grid: an integer step or a calendar day.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Timestamp {
    Index(u64),
    Date(NaiveDate),
}

impl Timestamp {
    fn same_kind(&self, other: &Timestamp) -> bool {
        matches!(
            (self, other),
            (Timestamp::Index(_), Timestamp::Index(_)) | (Timestamp::Date(_), Timestamp::Date(_))
        )
    }

    /// Signed number of steps from `origin` to `self`, or `None` when the
    /// two timestamps are of different kinds.
    fn steps_since(&self, origin: &Timestamp) -> Option<i64> {
        match (origin, self) {
            (Timestamp::Index(a), Timestamp::Index(b)) => Some(*b as i64 - *a as i64),
            (Timestamp::Date(a), Timestamp::Date(b)) => Some((*b - *a).num_days()),
            _ => None,
        }
    }

    fn advance(&self, steps: usize) -> Timestamp {
        match self {
            Timestamp::Index(i) => Timestamp::Index(i + steps as u64),
            Timestamp::Date(d) => Timestamp::Date(
                d.checked_add_days(Days::new(steps as u64))
                    .expect("date beyond calendar range"),
            ),
        }
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Timestamp::Index(i) => write!(f, "{i}"),
            Timestamp::Date(d) => write!(f, "{}", d.format(DATE_FORMAT)),
        }
    }
}

impl FromStr for Timestamp {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        if let Ok(i) = s.parse::<u64>() {
            return Ok(Timestamp::Index(i));
        }
        NaiveDate::parse_from_str(s, DATE_FORMAT)
            .map(Timestamp::Date)
            .map_err(|_| format!("invalid timestamp {s:?}"))
    }
}

/// A gap-free grid of `len` consecutive steps starting at `start`.
///
/// Step `i` (0-based) corresponds to `start + i` steps, where one step is
/// one integer unit or one calendar day.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TimeGrid {
    start: Timestamp,
    len: usize,
}

impl TimeGrid {
    pub fn new(start: Timestamp, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::config("time grid must have at least one step"));
        }
        Ok(Self { start, len })
    }

    /// Integer grid `0..len`.
    pub fn indexed(len: usize) -> Result<Self> {
        Self::new(Timestamp::Index(0), len)
    }

    pub fn start(&self) -> Timestamp {
        self.start
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Timestamp of step `index`.
    ///
    /// # Panics
    ///
    /// If `index` is outside the grid.
    pub fn timestamp(&self, index: usize) -> Timestamp {
        assert!(
            index < self.len,
            "index {index} outside grid of {}",
            self.len
        );
        self.start.advance(index)
    }

    /// Grid index of `ts`, `None` when it falls outside the grid or is of a
    /// different timestamp kind.
    pub fn index_of(&self, ts: &Timestamp) -> Option<usize> {
        let steps = ts.steps_since(&self.start)?;
        (0..self.len as i64)
            .contains(&steps)
            .then_some(steps as usize)
    }

    /// Sub-grid covering `range`.
    pub fn slice(&self, range: Range<usize>) -> Result<TimeGrid> {
        if range.start >= range.end || range.end > self.len {
            return Err(Error::config(format!(
                "cannot take steps {}..{} of a grid with {} steps",
                range.start, range.end, self.len
            )));
        }
        TimeGrid::new(self.start.advance(range.start), range.len())
    }

    pub(crate) fn ensure_same(&self, other: &TimeGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::Alignment(format!(
                "grid starting {} with {} steps vs grid starting {} with {} steps",
                self.start, self.len, other.start, other.len
            )))
        }
    }
}

/// Real-valued observations, one per grid step.
#[derive(Clone, Debug, PartialEq)]
pub struct InputSeries {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl InputSeries {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        check_values(&grid, &values)?;
        Ok(Self { grid, values })
    }

    /// Series on the integer grid `0..values.len()`.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::new(TimeGrid::indexed(values.len())?, values)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

pub(crate) fn check_values(grid: &TimeGrid, values: &[f64]) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::Alignment(format!(
            "{} values for a grid of {} steps",
            values.len(),
            grid.len()
        )));
    }
    if let Some(t) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite value at step {t}")));
    }
    Ok(())
}

/// Binary ground truth, one flag per grid step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventSeries {
    grid: TimeGrid,
    flags: Vec<bool>,
    count: usize,
}

impl EventSeries {
    pub fn new(grid: TimeGrid, flags: Vec<bool>) -> Result<Self> {
        if flags.len() != grid.len() {
            return Err(Error::Alignment(format!(
                "{} flags for a grid of {} steps",
                flags.len(),
                grid.len()
            )));
        }
        let count = flags.iter().filter(|&&f| f).count();
        Ok(Self { grid, flags, count })
    }

    /// Events on the integer grid `0..flags.len()`.
    pub fn from_flags(flags: Vec<bool>) -> Result<Self> {
        Self::new(TimeGrid::indexed(flags.len())?, flags)
    }

    /// Events at the given step indices; repeated indices collapse.
    pub fn from_indices(grid: TimeGrid, indices: &[usize]) -> Result<Self> {
        let mut flags = vec![false; grid.len()];
        for &i in indices {
            let slot = flags
                .get_mut(i)
                .ok_or_else(|| Error::config(format!("event index {i} outside grid")))?;
            *slot = true;
        }
        Self::new(grid, flags)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    /// Number of steps flagged as events.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn slice(&self, range: Range<usize>) -> Result<EventSeries> {
        let grid = self.grid.slice(range.clone())?;
        EventSeries::new(grid, self.flags[range].to_vec())
    }
}

/// Column layout of a series file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeriesFormat {
    pub timestamp_column: usize,
    pub value_column: usize,
}

impl Default for SeriesFormat {
    fn default() -> Self {
        Self {
            timestamp_column: 0,
            value_column: 1,
        }
    }
}

/// A loaded series together with ingestion warnings.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesLoad {
    pub series: InputSeries,
    /// Grid steps that had no row and were filled with zero.
    pub gaps_filled: usize,
}

/// A loaded event series together with ingestion warnings.
#[derive(Clone, Debug, PartialEq)]
pub struct EventLoad {
    pub events: EventSeries,
    /// Data rows read from the file.
    pub rows: usize,
    /// Rows whose timestamp was already flagged.
    pub duplicates: usize,
    /// Rows whose timestamp fell outside the grid.
    pub out_of_range: usize,
}

fn fields(line: &str) -> Vec<&str> {
    if line.contains(',') {
        line.split(',').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

/// Yields `(line number, fields)` for every data row.
fn data_rows<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader
        .lines()
        .enumerate()
        .filter_map(|(i, line)| match line {
            Err(e) => Some(Err(Error::parse(i + 1, e.to_string()))),
            Ok(line) => {
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('#') {
                    None
                } else {
                    Some(Ok((i + 1, trimmed.to_owned())))
                }
            }
        })
}

fn field<'a>(fields: &[&'a str], column: usize, line: usize) -> Result<&'a str> {
    fields
        .get(column)
        .copied()
        .filter(|f| !f.is_empty())
        .ok_or_else(|| Error::parse(line, format!("missing column {}", column + 1)))
}

fn parse_timestamp(raw: &str, line: usize, kind: Option<&Timestamp>) -> Result<Timestamp> {
    let ts: Timestamp = raw.parse().map_err(|e: String| Error::parse(line, e))?;
    if let Some(kind) = kind {
        if !ts.same_kind(kind) {
            return Err(Error::parse(
                line,
                format!("timestamp {ts} mixes integer and date forms"),
            ));
        }
    }
    Ok(ts)
}

/// Parses a series from `reader`, zero-filling missing grid steps.
pub fn parse_series<R: BufRead>(reader: R, format: SeriesFormat) -> Result<SeriesLoad> {
    let mut start: Option<Timestamp> = None;
    let mut previous: Option<Timestamp> = None;
    let mut values: Vec<f64> = Vec::new();
    let mut gaps_filled = 0;

    for row in data_rows(reader) {
        let (line, text) = row?;
        let cols = fields(&text);
        let ts = parse_timestamp(
            field(&cols, format.timestamp_column, line)?,
            line,
            start.as_ref(),
        )?;
        let raw = field(&cols, format.value_column, line)?;
        let value: f64 = raw
            .parse()
            .map_err(|_| Error::parse(line, format!("invalid value {raw:?}")))?;
        if !value.is_finite() {
            return Err(Error::parse(line, format!("non-finite value {raw:?}")));
        }

        if let Some(prev) = previous {
            if ts <= prev {
                return Err(Error::Order {
                    line,
                    previous: prev.to_string(),
                    current: ts.to_string(),
                });
            }
        }
        let origin = *start.get_or_insert(ts);
        let index = ts.steps_since(&origin).expect("kind checked") as usize;
        gaps_filled += index - values.len();
        values.resize(index, 0.0);
        values.push(value);
        previous = Some(ts);
    }

    let start = start.ok_or(Error::NoData)?;
    let grid = TimeGrid::new(start, values.len())?;
    Ok(SeriesLoad {
        series: InputSeries::new(grid, values)?,
        gaps_filled,
    })
}

/// Reads a series file. See [`parse_series`].
pub fn load_series(path: impl AsRef<Path>, format: SeriesFormat) -> Result<SeriesLoad> {
    parse_series(open(path.as_ref())?, format)
}

/// Parses event timestamps from `reader` onto `grid`.
///
/// Only the first column is read; any further columns (weights) are ignored.
pub fn parse_events<R: BufRead>(reader: R, grid: &TimeGrid) -> Result<EventLoad> {
    let mut flags = vec![false; grid.len()];
    let (mut rows, mut duplicates, mut out_of_range) = (0, 0, 0);
    let start = grid.start();

    for row in data_rows(reader) {
        let (line, text) = row?;
        let cols = fields(&text);
        let ts = parse_timestamp(field(&cols, 0, line)?, line, Some(&start))?;
        rows += 1;
        match grid.index_of(&ts) {
            Some(i) if flags[i] => duplicates += 1,
            Some(i) => flags[i] = true,
            None => out_of_range += 1,
        }
    }

    Ok(EventLoad {
        events: EventSeries::new(*grid, flags)?,
        rows,
        duplicates,
        out_of_range,
    })
}

/// Reads an events file. See [`parse_events`].
pub fn load_events(path: impl AsRef<Path>, grid: &TimeGrid) -> Result<EventLoad> {
    parse_events(open(path.as_ref())?, grid)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })
}

/// Writes `(timestamp, value)` rows, tab-separated, with round-trip exact
/// values.
pub fn write_series<W: Write>(mut out: W, series: &InputSeries) -> std::io::Result<()> {
    for (i, v) in series.values().iter().enumerate() {
        writeln!(out, "{}\t{}", series.grid().timestamp(i), v)?;
    }
    Ok(())
}
