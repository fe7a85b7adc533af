// SPDX-License-Identifier: Apache-2.0

//! Permutation null distributions of the two true-positive counts.
//!
//! The event series is shuffled uniformly (Fisher–Yates) while the
//! predictions stay fixed, and both true-positive counts are recorded per
//! replicate. Replicate `i` draws from ChaCha8 stream `i` of the plan seed,
//! so results depend only on `(seed, replicates)` and never on how the work
//! is chunked or scheduled.

use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::format;
use crate::par;
use crate::scoring::ScoreSeries;
use crate::seqdata::EventSeries;
use crate::toleval::{
    check_axes, dilate, predict, quantile_thresholds, PredictionSeries, Side, Tolerance,
};

/// How many replicates to simulate, from which seed, in how many chunks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PermutationPlan {
    replicates: usize,
    seed: u64,
    parallel_chunks: usize,
}

impl PermutationPlan {
    pub const DEFAULT_REPLICATES: usize = 10_000;

    pub fn new(replicates: usize, seed: u64, parallel_chunks: usize) -> Result<Self> {
        if replicates == 0 {
            return Err(Error::config("at least one replicate is required"));
        }
        if parallel_chunks == 0 {
            return Err(Error::config("parallel_chunks must be positive"));
        }
        Ok(Self {
            replicates,
            seed,
            parallel_chunks,
        })
    }

    pub fn replicates(&self) -> usize {
        self.replicates
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn parallel_chunks(&self) -> usize {
        self.parallel_chunks
    }

    pub fn with_parallel_chunks(self, parallel_chunks: usize) -> Result<Self> {
        Self::new(self.replicates, self.seed, parallel_chunks)
    }
}

impl Default for PermutationPlan {
    fn default() -> Self {
        Self {
            replicates: Self::DEFAULT_REPLICATES,
            seed: 0,
            parallel_chunks: 64,
        }
    }
}

/// Generator for replicate `index` of a plan seeded with `seed`.
pub fn replicate_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniformly random rearrangement of the event flags.
pub fn permute_events<R: Rng + ?Sized>(events: &EventSeries, rng: &mut R) -> EventSeries {
    let mut flags = events.flags().to_vec();
    flags.shuffle(rng);
    EventSeries::new(*events.grid(), flags).expect("same grid")
}

/// Runs `plan.replicates()` permutations and collects `width` counts per
/// replicate, replicate-major.
///
/// `kernel` receives the sorted event positions of one permuted series.
fn run_replicates<K>(
    events: &EventSeries,
    plan: &PermutationPlan,
    width: usize,
    kernel: K,
) -> Vec<u32>
where
    K: Fn(&[usize], &mut [u32]) + Sync + Send,
{
    let original = events.flags();
    let per_replicate = par::map_ranges(plan.replicates, plan.parallel_chunks, |range| {
        let mut flags = original.to_vec();
        let mut positions = Vec::with_capacity(events.count());
        range
            .map(|i| {
                flags.copy_from_slice(original);
                flags.shuffle(&mut replicate_rng(plan.seed, i as u64));
                positions.clear();
                positions.extend(flags.iter().enumerate().filter(|(_, &f)| f).map(|(t, _)| t));
                let mut out = vec![0u32; width];
                kernel(&positions, &mut out);
                out
            })
            .collect()
    });
    per_replicate.into_iter().flatten().collect()
}

/// Fixed predictions prepared for fast true-positive counting against
/// sparse event positions.
struct PreparedPredictions {
    /// `prefix[t]` = number of predictions in `0..t`.
    prefix: Vec<u32>,
    /// Dilated predictions, one per tolerance.
    dilated: Vec<Vec<bool>>,
}

impl PreparedPredictions {
    fn new(flags: &[bool], deltas: &[Tolerance]) -> Self {
        let mut prefix = Vec::with_capacity(flags.len() + 1);
        let mut acc = 0u32;
        prefix.push(0);
        for &f in flags {
            acc += u32::from(f);
            prefix.push(acc);
        }
        let dilated = deltas.iter().map(|&d| dilate(flags, d)).collect();
        Self { prefix, dilated }
    }

    fn count_in(&self, lo: usize, hi_inclusive: usize) -> u32 {
        self.prefix[hi_inclusive + 1] - self.prefix[lo]
    }
}

/// Merges `[p - δ, p + δ]` windows around sorted positions, clipped to
/// `0..len`, into disjoint inclusive intervals.
fn covered_intervals(positions: &[usize], delta: usize, len: usize, out: &mut Vec<(usize, usize)>) {
    out.clear();
    for &p in positions {
        let lo = p.saturating_sub(delta);
        let hi = (p + delta).min(len - 1);
        match out.last_mut() {
            Some(last) if lo <= last.1 + 1 => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
}

/// Simulated true-positive counts of one statistic.
#[derive(Clone, Debug, PartialEq)]
pub struct NullDistribution {
    statistic: Side,
    samples: Vec<u32>,
    n_trials: u32,
    p_hat: f64,
}

impl NullDistribution {
    /// Sorts `samples` and fits the binomial success probability
    /// `mean / n_trials`.
    pub fn new(statistic: Side, mut samples: Vec<u32>, n_trials: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::config("null distribution needs at least one sample"));
        }
        if n_trials == 0 {
            return Err(Error::Degenerate(format!(
                "{statistic} null distribution has zero binomial trials"
            )));
        }
        if let Some(&s) = samples.iter().find(|&&s| s > n_trials) {
            return Err(Error::Domain(format!(
                "sample {s} exceeds {n_trials} trials"
            )));
        }
        samples.sort_unstable();
        let mean = samples.iter().map(|&s| s as f64).sum::<f64>() / samples.len() as f64;
        Ok(Self {
            statistic,
            samples,
            n_trials,
            p_hat: mean / n_trials as f64,
        })
    }

    pub fn statistic(&self) -> Side {
        self.statistic
    }

    /// Samples in ascending order.
    pub fn samples(&self) -> &[u32] {
        &self.samples
    }

    pub fn replicates(&self) -> usize {
        self.samples.len()
    }

    /// Binomial trial count: predictions for the ground-tolerant count,
    /// events for the prediction-tolerant count.
    pub fn n_trials(&self) -> u32 {
        self.n_trials
    }

    pub fn p_hat(&self) -> f64 {
        self.p_hat
    }

    pub fn mean(&self) -> f64 {
        self.p_hat * self.n_trials as f64
    }

    /// Unbiased sample variance; zero for a single sample.
    pub fn sample_variance(&self) -> f64 {
        let n = self.samples.len();
        if n < 2 {
            return 0.0;
        }
        let mean = self.mean();
        self.samples
            .iter()
            .map(|&s| (s as f64 - mean).powi(2))
            .sum::<f64>()
            / (n - 1) as f64
    }

    pub fn min(&self) -> u32 {
        self.samples[0]
    }

    pub fn max(&self) -> u32 {
        *self.samples.last().expect("non-empty")
    }

    /// Writes the simulated and fitted CDFs over `min..=max` as
    /// `k, ecdf(k), k, binomial_cdf(k)` rows.
    pub fn write_table<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "# statistic={} n_trials={} replicates={} p_hat={}",
            self.statistic,
            self.n_trials,
            self.replicates(),
            format::real(self.p_hat)
        )?;
        writeln!(out, "# k\tecdf\tk\tbinomial_cdf")?;
        for k in self.min()..=self.max() {
            let fitted = binomial_cdf(self.n_trials as u64, self.p_hat, k as i64)
                .expect("p_hat within [0, 1]");
            writeln!(
                out,
                "{k}\t{}\t{k}\t{}",
                format::real(ecdf(self, k as i64)),
                format::real(fitted)
            )?;
        }
        Ok(())
    }

    /// Rebuilds a distribution from a table written by [`Self::write_table`].
    pub fn parse_table<R: BufRead>(reader: R) -> Result<Self> {
        let mut meta: Option<(Side, u32, usize)> = None;
        let mut ecdf_rows: Vec<(u32, f64)> = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::parse(line_no, e.to_string()))?;
            let line = line.trim();
            if let Some(header) = line.strip_prefix('#') {
                if header.contains("statistic=") {
                    meta = Some(parse_meta(header, line_no)?);
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let (k, f) = match cols.as_slice() {
                [k, f, _, _] => (k.parse::<u32>().ok(), f.parse::<f64>().ok()),
                _ => (None, None),
            };
            match (k, f) {
                (Some(k), Some(f)) => ecdf_rows.push((k, f)),
                _ => return Err(Error::parse(line_no, "expected k, ecdf, k, binomial_cdf")),
            }
        }
        let (statistic, n_trials, replicates) =
            meta.ok_or_else(|| Error::parse(1, "missing statistic header"))?;

        let mut samples = Vec::with_capacity(replicates);
        let mut previous = 0.0;
        for (k, f) in ecdf_rows {
            let count = ((f - previous) * replicates as f64).round();
            if count < 0.0 {
                return Err(Error::parse(0, format!("ecdf decreases at k={k}")));
            }
            samples.extend(std::iter::repeat_n(k, count as usize));
            previous = f;
        }
        if samples.len() != replicates {
            return Err(Error::parse(
                0,
                format!(
                    "table holds {} samples, header says {replicates}",
                    samples.len()
                ),
            ));
        }
        NullDistribution::new(statistic, samples, n_trials)
    }
}

fn parse_meta(header: &str, line: usize) -> Result<(Side, u32, usize)> {
    let mut statistic = None;
    let mut n_trials = None;
    let mut replicates = None;
    for kv in header.split_whitespace() {
        match kv.split_once('=') {
            Some(("statistic", v)) => statistic = Some(v.parse::<Side>()?),
            Some(("n_trials", v)) => n_trials = v.parse().ok(),
            Some(("replicates", v)) => replicates = v.parse().ok(),
            _ => {}
        }
    }
    match (statistic, n_trials, replicates) {
        (Some(s), Some(n), Some(r)) => Ok((s, n, r)),
        _ => Err(Error::parse(line, "incomplete distribution header")),
    }
}

/// Null distributions of both true-positive counts from one set of
/// permutations.
#[derive(Clone, Debug, PartialEq)]
pub struct NullPair {
    /// True positives of the ground-tolerant matrix (precision numerator).
    pub ground_tolerant: NullDistribution,
    /// True positives of the prediction-tolerant matrix (recall numerator).
    pub prediction_tolerant: NullDistribution,
}

impl NullPair {
    pub fn get(&self, side: Side) -> &NullDistribution {
        match side {
            Side::GroundTolerant => &self.ground_tolerant,
            Side::PredictionTolerant => &self.prediction_tolerant,
        }
    }
}

fn check_non_degenerate(events: usize, predictions: usize) -> Result<()> {
    if events == 0 {
        return Err(Error::Degenerate("event series has no events".into()));
    }
    if predictions == 0 {
        return Err(Error::Degenerate(
            "prediction series has no predictions".into(),
        ));
    }
    Ok(())
}

/// Simulates both true-positive counts under random permutation of the
/// events, keeping predictions and tolerance fixed.
pub fn simulate_null(
    events: &EventSeries,
    preds: &PredictionSeries,
    delta: Tolerance,
    plan: &PermutationPlan,
) -> Result<NullPair> {
    events.grid().ensure_same(preds.grid())?;
    check_non_degenerate(events.count(), preds.count())?;

    let prepared = PreparedPredictions::new(preds.flags(), &[delta]);
    let len = events.len();
    let counts = run_replicates(events, plan, 2, |positions, out| {
        let mut intervals = Vec::new();
        covered_intervals(positions, delta.0, len, &mut intervals);
        out[0] = intervals
            .iter()
            .map(|&(lo, hi)| prepared.count_in(lo, hi))
            .sum();
        out[1] = positions
            .iter()
            .filter(|&&p| prepared.dilated[0][p])
            .count() as u32;
    });

    let (ground, prediction): (Vec<u32>, Vec<u32>) =
        counts.chunks_exact(2).map(|c| (c[0], c[1])).unzip();
    Ok(NullPair {
        ground_tolerant: NullDistribution::new(Side::GroundTolerant, ground, preds.count() as u32)?,
        prediction_tolerant: NullDistribution::new(
            Side::PredictionTolerant,
            prediction,
            events.count() as u32,
        )?,
    })
}

/// True-positive counts of every `(quantile, δ)` cell for every replicate,
/// all cells sharing one set of permutations.
#[derive(Clone, Debug)]
pub struct SimulatedSweep {
    quantiles: Vec<f64>,
    deltas: Vec<Tolerance>,
    taus: Vec<f64>,
    replicates: usize,
    event_count: usize,
    prediction_counts: Vec<usize>,
    /// `[replicate][quantile][delta][side]`, side 0 = ground-tolerant.
    counts: Vec<u32>,
}

impl SimulatedSweep {
    pub fn quantiles(&self) -> &[f64] {
        &self.quantiles
    }

    pub fn deltas(&self) -> &[Tolerance] {
        &self.deltas
    }

    /// Absolute thresholds of the quantile levels.
    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn replicates(&self) -> usize {
        self.replicates
    }

    fn offset(&self, replicate: usize, qi: usize, di: usize) -> usize {
        ((replicate * self.quantiles.len() + qi) * self.deltas.len() + di) * 2
    }

    pub fn true_positives(&self, replicate: usize, qi: usize, di: usize, side: Side) -> u32 {
        let o = self.offset(replicate, qi, di);
        match side {
            Side::GroundTolerant => self.counts[o],
            Side::PredictionTolerant => self.counts[o + 1],
        }
    }

    pub fn precision(&self, replicate: usize, qi: usize, di: usize) -> Option<f64> {
        let den = self.prediction_counts[qi];
        (den > 0).then(|| {
            self.true_positives(replicate, qi, di, Side::GroundTolerant) as f64 / den as f64
        })
    }

    pub fn recall(&self, replicate: usize, qi: usize, di: usize) -> Option<f64> {
        let den = self.event_count;
        (den > 0).then(|| {
            self.true_positives(replicate, qi, di, Side::PredictionTolerant) as f64 / den as f64
        })
    }

    /// Null distributions of one cell over all replicates.
    pub fn null(&self, qi: usize, di: usize) -> Result<NullPair> {
        let collect = |side| {
            (0..self.replicates)
                .map(|r| self.true_positives(r, qi, di, side))
                .collect::<Vec<_>>()
        };
        Ok(NullPair {
            ground_tolerant: NullDistribution::new(
                Side::GroundTolerant,
                collect(Side::GroundTolerant),
                self.prediction_counts[qi] as u32,
            )?,
            prediction_tolerant: NullDistribution::new(
                Side::PredictionTolerant,
                collect(Side::PredictionTolerant),
                self.event_count as u32,
            )?,
        })
    }
}

/// Permutation simulation over a whole `(quantile, δ)` grid.
pub fn simulate_sweep(
    events: &EventSeries,
    scores: &ScoreSeries,
    quantiles: &[f64],
    deltas: &[Tolerance],
    plan: &PermutationPlan,
) -> Result<SimulatedSweep> {
    check_axes(quantiles, deltas)?;
    events.grid().ensure_same(scores.grid())?;
    if events.count() == 0 {
        return Err(Error::Degenerate("event series has no events".into()));
    }

    let taus = quantile_thresholds(scores, quantiles);
    let predictions: Vec<PredictionSeries> = taus.iter().map(|&t| predict(scores, t)).collect();
    let prepared: Vec<PreparedPredictions> = predictions
        .iter()
        .map(|p| PreparedPredictions::new(p.flags(), deltas))
        .collect();
    let len = events.len();
    let width = quantiles.len() * deltas.len() * 2;

    let counts = run_replicates(events, plan, width, |positions, out| {
        let mut intervals = Vec::new();
        for (di, delta) in deltas.iter().enumerate() {
            covered_intervals(positions, delta.0, len, &mut intervals);
            for (qi, prep) in prepared.iter().enumerate() {
                let o = (qi * deltas.len() + di) * 2;
                out[o] = intervals
                    .iter()
                    .map(|&(lo, hi)| prep.count_in(lo, hi))
                    .sum();
                out[o + 1] = positions.iter().filter(|&&p| prep.dilated[di][p]).count() as u32;
            }
        }
    });

    Ok(SimulatedSweep {
        quantiles: quantiles.to_vec(),
        deltas: deltas.to_vec(),
        taus,
        replicates: plan.replicates,
        event_count: events.count(),
        prediction_counts: predictions.iter().map(PredictionSeries::count).collect(),
        counts,
    })
}

/// Upper-tail Monte Carlo p-value with the add-one correction:
/// `(1 + #{samples >= observed}) / (1 + replicates)`.
pub fn mc_pvalue(null: &NullDistribution, observed: u64) -> f64 {
    let below = null.samples.partition_point(|&s| (s as u64) < observed);
    let at_least = null.samples.len() - below;
    (1 + at_least) as f64 / (1 + null.samples.len()) as f64
}

/// Fraction of samples `<= k`.
pub fn ecdf(null: &NullDistribution, k: i64) -> f64 {
    if k < 0 {
        return 0.0;
    }
    let at_most = null.samples.partition_point(|&s| (s as i64) <= k);
    at_most as f64 / null.samples.len() as f64
}

/// `P(X <= k)` for `X ~ Binomial(n, p)`.
///
/// The tail below the mean (or above it, via the complement) is summed
/// from the boundary term outward with the pmf ratio recurrence. The
/// boundary term uses the saddle-point expansion of the pmf, which stays
/// accurate for large `n` where `ln Γ` differences would cancel.
pub fn binomial_cdf(n: u64, p: f64, k: i64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!(
            "success probability {p} outside [0, 1]"
        )));
    }
    if k < 0 {
        return Ok(0.0);
    }
    let k = k as u64;
    if k >= n {
        return Ok(1.0);
    }
    if p == 0.0 {
        return Ok(1.0);
    }
    if p == 1.0 {
        return Ok(0.0);
    }
    let q = 1.0 - p;
    let nf = n as f64;

    if (k as f64) < nf * p {
        // Terms fall geometrically going down from k.
        Ok(tail_sum(
            binomial_pmf(k, n, p, q),
            k,
            |j| (j as f64 / (nf - j as f64 + 1.0)) * (q / p),
            |j| j.checked_sub(1),
        ))
    } else {
        let first = k + 1;
        let upper = tail_sum(
            binomial_pmf(first, n, p, q),
            first,
            |j| ((nf - j as f64) / (j as f64 + 1.0)) * (p / q),
            |j| (j < n).then_some(j + 1),
        );
        Ok((1.0 - upper).clamp(0.0, 1.0))
    }
}

/// Sums `term, term·r(j), …` stepping `j` with `next` until the remaining
/// geometric bound is negligible.
fn tail_sum(
    mut term: f64,
    mut j: u64,
    ratio: impl Fn(u64) -> f64,
    next: impl Fn(u64) -> Option<u64>,
) -> f64 {
    let mut sum = 0.0;
    loop {
        sum += term;
        let r = ratio(j);
        let Some(nj) = next(j) else { break };
        term *= r;
        if term == 0.0 || (r < 1.0 && term * r / (1.0 - r) < sum * 1e-17) {
            sum += term;
            break;
        }
        j = nj;
    }
    sum
}

/// `ln(n!) - ((n + ½) ln n - n + ln √(2π))` for integer `n ≥ 1`.
#[allow(clippy::excessive_precision)]
fn stirling_error(n: u64) -> f64 {
    const TABLE: [f64; 16] = [
        0.0,
        0.08106146679532725821967,
        0.04134069595540929409382,
        0.02767792568499833914879,
        0.02079067210376509311152,
        0.01664469118982119216319,
        0.01387612882307074799875,
        0.01189670994589177009506,
        0.01041126526197209649748,
        0.009255462182712732917729,
        0.008330563433362871256469,
        0.007573675487951840794972,
        0.006942840107209529865664,
        0.00640899418800420706844,
        0.005951370112758847735624,
        0.005554733551962801371039,
    ];
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;

    if n <= 15 {
        return TABLE[n as usize];
    }
    let x = n as f64;
    let xx = x * x;
    if n > 500 {
        (S0 - S1 / xx) / x
    } else if n > 80 {
        (S0 - (S1 - S2 / xx) / xx) / x
    } else if n > 35 {
        (S0 - (S1 - (S2 - S3 / xx) / xx) / xx) / x
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / xx) / xx) / xx) / xx) / x
    }
}

/// Deviance term `x ln(x / m) + m - x`, series-expanded near `x = m`.
fn deviance(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let mut v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let next = s + ej / (2 * j + 1) as f64;
            if next == s {
                return next;
            }
            s = next;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

/// Binomial pmf at `x` via the saddle-point expansion.
fn binomial_pmf(x: u64, n: u64, p: f64, q: f64) -> f64 {
    let nf = n as f64;
    if x == 0 {
        let lc = if p < 0.1 {
            -deviance(nf, nf * q) - nf * p
        } else {
            nf * q.ln()
        };
        return lc.exp();
    }
    if x == n {
        let lc = if q < 0.1 {
            -deviance(nf, nf * p) - nf * q
        } else {
            nf * p.ln()
        };
        return lc.exp();
    }
    let xf = x as f64;
    let lc = stirling_error(n)
        - stirling_error(x)
        - stirling_error(n - x)
        - deviance(xf, nf * p)
        - deviance(nf - xf, nf * q);
    let lf = (2.0 * std::f64::consts::PI).ln() + xf.ln() + (-xf / nf).ln_1p();
    (lc - 0.5 * lf).exp()
}

/// Goodness of fit of a null distribution to its fitted binomial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitDiagnostics {
    /// Largest CDF gap over the integers between the smallest and largest
    /// sample.
    pub ks_distance: f64,
    /// Sample variance over binomial variance; `None` when `p̂` is 0 or 1.
    pub dispersion_ratio: Option<f64>,
}

impl FitDiagnostics {
    pub fn overdispersed(&self) -> bool {
        self.dispersion_ratio.is_some_and(|r| r > 1.0)
    }
}

/// KS distance and dispersion ratio against `Binomial(n_trials, p̂)`.
pub fn binomial_fit_diagnostics(null: &NullDistribution) -> Result<FitDiagnostics> {
    if null.replicates() < 2 {
        return Err(Error::Degenerate(
            "fit diagnostics need at least two replicates".into(),
        ));
    }
    let n = null.n_trials as u64;
    let p = null.p_hat;
    let mut ks_distance: f64 = 0.0;
    for k in null.min()..=null.max() {
        let gap = (ecdf(null, k as i64) - binomial_cdf(n, p, k as i64)?).abs();
        ks_distance = ks_distance.max(gap);
    }
    let binomial_variance = n as f64 * p * (1.0 - p);
    let dispersion_ratio = (p > 0.0 && p < 1.0).then(|| null.sample_variance() / binomial_variance);
    Ok(FitDiagnostics {
        ks_distance,
        dispersion_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    use crate::toleval::{confusion_ground_tolerant, confusion_prediction_tolerant};

    fn null(samples: &[u32], n_trials: u32) -> NullDistribution {
        NullDistribution::new(Side::GroundTolerant, samples.to_vec(), n_trials).unwrap()
    }

    fn bits(s: &[u8]) -> Vec<bool> {
        s.iter().map(|&b| b == 1).collect()
    }

    #[test]
    fn permuting_empty_or_full_is_identity() {
        let mut rng = replicate_rng(1, 0);
        let none = EventSeries::from_flags(vec![false; 3]).unwrap();
        let all = EventSeries::from_flags(vec![true; 3]).unwrap();
        for _ in 0..10 {
            assert_eq!(permute_events(&none, &mut rng), none);
            assert_eq!(permute_events(&all, &mut rng), all);
        }
    }

    #[test]
    fn single_event_lands_uniformly() {
        let e = EventSeries::from_flags(bits(&[1, 0, 0])).unwrap();
        let draws = 30_000;
        let mut hits = [0usize; 3];
        let mut rng = replicate_rng(7, 0);
        for _ in 0..draws {
            let p = permute_events(&e, &mut rng);
            assert_eq!(p.count(), 1);
            hits[p.flags().iter().position(|&f| f).unwrap()] += 1;
        }
        let expected = draws as f64 / 3.0;
        let sigma = (draws as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
        for h in hits {
            assert!((h as f64 - expected).abs() <= 3.0 * sigma, "{hits:?}");
        }
    }

    #[test]
    fn kernel_matches_dense_confusion_matrices() {
        let e = EventSeries::from_flags(bits(&[0, 1, 0, 0, 1, 0, 0, 0, 1, 1, 0, 0, 0, 1])).unwrap();
        let p = PredictionSeries::from_flags(bits(&[1, 1, 0, 0, 0, 1, 0, 1, 0, 0, 0, 0, 1, 0]))
            .unwrap();
        for delta in [0, 1, 3] {
            let plan = PermutationPlan::new(200, 99, 3).unwrap();
            let pair = simulate_null(&e, &p, Tolerance(delta), &plan).unwrap();
            let mut ground = Vec::new();
            let mut prediction = Vec::new();
            for i in 0..200 {
                let perm = permute_events(&e, &mut replicate_rng(99, i));
                ground.push(
                    confusion_ground_tolerant(&perm, &p, Tolerance(delta))
                        .unwrap()
                        .true_positives as u32,
                );
                prediction.push(
                    confusion_prediction_tolerant(&perm, &p, Tolerance(delta))
                        .unwrap()
                        .true_positives as u32,
                );
            }
            ground.sort_unstable();
            prediction.sort_unstable();
            assert_eq!(pair.ground_tolerant.samples(), &ground[..]);
            assert_eq!(pair.prediction_tolerant.samples(), &prediction[..]);
        }
    }

    #[test]
    fn saturated_predictions() {
        let e = EventSeries::from_flags(bits(&[0, 1, 0, 0, 0, 0, 1, 0, 0, 0])).unwrap();
        let p = PredictionSeries::from_flags(vec![true; 10]).unwrap();
        let plan = PermutationPlan::new(500, 3, 4).unwrap();
        let pair = simulate_null(&e, &p, Tolerance(1), &plan).unwrap();
        assert!(pair.prediction_tolerant.samples().iter().all(|&s| s == 2));
        // Two events dilated by one cover between 3 (adjacent at an edge)
        // and 6 steps.
        assert!(pair
            .ground_tolerant
            .samples()
            .iter()
            .all(|&s| (3..=6).contains(&s)));
        assert_eq!(pair.ground_tolerant.n_trials(), 10);
        assert_eq!(pair.prediction_tolerant.n_trials(), 2);
    }

    #[test]
    fn degenerate_inputs_name_the_empty_side() {
        let p = PredictionSeries::from_flags(bits(&[1, 0, 0])).unwrap();
        let e = EventSeries::from_flags(vec![false; 3]).unwrap();
        let err = simulate_null(&e, &p, Tolerance(0), &PermutationPlan::default()).unwrap_err();
        assert!(err.is_degenerate());
        assert!(err.to_string().contains("event"));

        let e = EventSeries::from_flags(bits(&[1, 0, 0])).unwrap();
        let p = PredictionSeries::from_flags(vec![false; 3]).unwrap();
        let err = simulate_null(&e, &p, Tolerance(0), &PermutationPlan::default()).unwrap_err();
        assert!(err.to_string().contains("prediction"));
    }

    #[test]
    fn plan_validation() {
        assert!(PermutationPlan::new(0, 1, 1).is_err());
        assert!(PermutationPlan::new(1, 1, 0).is_err());
        assert_eq!(PermutationPlan::default().replicates(), 10_000);
    }

    #[test]
    fn pvalue_examples() {
        let n = null(&vec![3; 10_000], 10);
        assert_abs_diff_eq!(mc_pvalue(&n, 4), 1.0 / 10_001.0);
        assert_eq!(mc_pvalue(&n, 0), 1.0);
        assert_eq!(mc_pvalue(&null(&[1, 2, 3], 5), 2), 0.75);
    }

    #[test]
    fn ecdf_examples() {
        let n = null(&[3, 1, 2], 5);
        assert_abs_diff_eq!(ecdf(&n, 2), 2.0 / 3.0);
        assert_eq!(ecdf(&n, 0), 0.0);
        assert_eq!(ecdf(&n, -4), 0.0);
        assert_eq!(ecdf(&n, 3), 1.0);
        assert_eq!(ecdf(&n, 40), 1.0);
    }

    #[test]
    fn binomial_cdf_small_exact() {
        // 638 / 1024
        assert_eq!(binomial_cdf(10, 0.5, 5).unwrap(), 0.623046875);
        assert_eq!(binomial_cdf(7, 0.3, 7).unwrap(), 1.0);
        assert_eq!(binomial_cdf(7, 0.3, 100).unwrap(), 1.0);
        assert_eq!(binomial_cdf(7, 0.3, -1).unwrap(), 0.0);
        assert_eq!(binomial_cdf(0, 0.3, 0).unwrap(), 1.0);
        assert_eq!(binomial_cdf(5, 0.0, 0).unwrap(), 1.0);
        assert_eq!(binomial_cdf(5, 1.0, 4).unwrap(), 0.0);
        assert!(matches!(binomial_cdf(5, 1.5, 2), Err(Error::Domain(_))));
        assert!(binomial_cdf(5, f64::NAN, 2).is_err());
    }

    #[test]
    fn binomial_cdf_matches_exact_rational_sum() {
        // Exact sums with integer arithmetic at p = 1/4, n <= 40.
        for n in [1u64, 2, 5, 17, 40] {
            let mut acc: u128 = 0;
            let total = 4u128.pow(n as u32);
            for k in 0..=n {
                acc += binom(n, k) * 3u128.pow((n - k) as u32);
                let exact = acc as f64 / total as f64;
                assert_abs_diff_eq!(
                    binomial_cdf(n, 0.25, k as i64).unwrap(),
                    exact,
                    epsilon = 1e-15
                );
            }
        }
    }

    fn binom(n: u64, k: u64) -> u128 {
        (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn binomial_cdf_matches_high_precision_oracle() {
        // Reference values from 80-digit summation of the pmf.
        let cases: &[(u64, f64, i64, f64)] = &[
            (20, 0.3, 4, 0.23750777887760167586),
            (150, 0.23, 30, 0.22094587678373613496),
            (300, 0.23, 69, 0.53223224972983119747),
            (1000, 0.001, 0, 0.36769542477096403696),
            (1000, 0.999, 998, 0.26424108696981301438),
            (100000, 0.5, 49800, 0.10351948588211242213),
            (1000000, 0.5, 499500, 0.15889734568165276856),
            (1000000, 0.5, 500800, 0.94531156352362607109),
            (1000000, 0.01, 9900, 0.15865120924671097827),
            (1000000, 0.2, 200500, 0.8945526218959239171),
            (1000000, 0.000001, 2, 0.91969869489855041094),
            (50, 0.9, 40, 0.024537935704591422916),
            (1000000, 0.999, 998900, 0.00095746697002863209279),
        ];
        for &(n, p, k, want) in cases {
            let got = binomial_cdf(n, p, k).unwrap();
            assert!(
                (got - want).abs() <= 1e-12,
                "n={n} p={p} k={k}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn dispersion_of_two_point_samples() {
        let d = binomial_fit_diagnostics(&null(&[0, 2], 2)).unwrap();
        assert_eq!(d.dispersion_ratio, Some(4.0));
        assert!(d.overdispersed());
    }

    #[test]
    fn constant_samples_have_zero_dispersion() {
        let d = binomial_fit_diagnostics(&null(&[3, 3, 3, 3], 10)).unwrap();
        assert_eq!(d.dispersion_ratio, Some(0.0));
    }

    #[test]
    fn boundary_p_hat_has_undefined_dispersion() {
        let d = binomial_fit_diagnostics(&null(&[0, 0, 0], 10)).unwrap();
        assert_eq!(d.dispersion_ratio, None);
        assert_eq!(d.ks_distance, 0.0);
        let d = binomial_fit_diagnostics(&null(&[10, 10], 10)).unwrap();
        assert_eq!(d.dispersion_ratio, None);
    }

    #[test]
    fn diagnostics_need_two_replicates() {
        assert!(binomial_fit_diagnostics(&null(&[1], 3))
            .unwrap_err()
            .is_degenerate());
    }

    #[test]
    fn binomial_samples_fit_their_binomial() {
        let (n, p, reps) = (60u32, 0.3, 20_000);
        let mut rng = replicate_rng(11, 0);
        let samples: Vec<u32> = (0..reps)
            .map(|_| (0..n).filter(|_| rng.random::<f64>() < p).count() as u32)
            .collect();
        let d = binomial_fit_diagnostics(&null(&samples, n)).unwrap();
        // Variance estimator: sd of s² / σ² is about sqrt(2 / (reps - 1)).
        let tol = 3.0 * (2.0 / (reps - 1) as f64).sqrt();
        assert!((d.dispersion_ratio.unwrap() - 1.0).abs() < tol, "{d:?}");
        assert!(d.ks_distance < 0.02, "{d:?}");
    }

    #[test]
    fn table_round_trip() {
        let n =
            NullDistribution::new(Side::PredictionTolerant, vec![4, 2, 2, 7, 5, 5, 5], 9).unwrap();
        let mut buf = Vec::new();
        n.write_table(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# statistic=prediction_tolerant n_trials=9 replicates=7"));
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 6);
        assert_eq!(NullDistribution::parse_table(&buf[..]).unwrap(), n);
    }

    #[test]
    fn covered_intervals_merge_and_clip() {
        let mut out = Vec::new();
        covered_intervals(&[0, 3, 9], 2, 10, &mut out);
        assert_eq!(out, vec![(0, 5), (7, 9)]);
        covered_intervals(&[4], 0, 10, &mut out);
        assert_eq!(out, vec![(4, 4)]);
    }

    proptest! {
        #[test]
        fn permutation_preserves_count(
            flags in proptest::collection::vec(any::<bool>(), 1..100),
            seed in any::<u64>(),
        ) {
            let e = EventSeries::from_flags(flags).unwrap();
            let p = permute_events(&e, &mut replicate_rng(seed, 0));
            prop_assert_eq!(p.count(), e.count());
        }

        #[test]
        fn pvalue_non_increasing(samples in proptest::collection::vec(0u32..30, 1..50), k in 0u64..30) {
            let n = null(&samples, 30);
            prop_assert!(mc_pvalue(&n, k + 1) <= mc_pvalue(&n, k));
        }

        #[test]
        fn cdfs_non_decreasing(
            samples in proptest::collection::vec(0u32..30, 1..50),
            n in 0u64..400,
            p in 0f64..=1.0,
        ) {
            let null = null(&samples, 30);
            let mut prev_e = 0.0;
            let mut prev_b = 0.0;
            for k in -1..=(n as i64 + 1).max(31) {
                let e = ecdf(&null, k);
                let b = binomial_cdf(n, p, k).unwrap();
                prop_assert!(e >= prev_e);
                prop_assert!(b >= prev_b - 1e-15);
                prev_e = e;
                prev_b = b;
            }
            prop_assert_eq!(prev_e, 1.0);
            prop_assert_eq!(prev_b, 1.0);
            prop_assert_eq!(ecdf(&null, -1), 0.0);
        }
    }
}
