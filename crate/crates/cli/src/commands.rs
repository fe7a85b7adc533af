// SPDX-License-Identifier: Apache-2.0

//! The four subcommands as library functions, one output directory each.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use tolsig::seqdata::SeriesFormat;
use tolsig::significance::simulate_sweep;
use tolsig::{
    binomial_fit_diagnostics, confusion_ground_tolerant, confusion_prediction_tolerant, format,
    load_events, load_series, mc_pvalue, precision_tolerant, predict, recall_tolerant,
    resolve_threshold, simulate_null, sta_lta_score, sweep, EventSeries, NullDistribution,
    ScoreSeries, Side, SweepResult, Threshold, Tolerance,
};

use crate::config::{RunConfig, ScoringInput};
use crate::report::{format_pvalue, CurveTable, NullReport, ObservedStat, SideSummary};

/// Replicate counts below this get a warning from `nulldist`.
pub const RECOMMENDED_REPLICATES: usize = 1000;

fn warn(message: impl AsRef<str>) {
    eprintln!("warning: {}", message.as_ref());
}

fn load_scores(cfg: &RunConfig) -> Result<ScoreSeries> {
    let (path, load) = match &cfg.scoring {
        ScoringInput::Series(p) | ScoringInput::Scores(p) => {
            (p, load_series(p, SeriesFormat::default())?)
        }
    };
    if load.gaps_filled > 0 {
        warn(format!(
            "{}: {} missing steps filled with 0",
            path.display(),
            load.gaps_filled
        ));
    }
    Ok(match cfg.scoring {
        ScoringInput::Series(_) => sta_lta_score(&load.series, cfg.sta_lta)?,
        ScoringInput::Scores(_) => ScoreSeries::from(load.series),
    })
}

/// Scores and events on one grid, with the warm-up region removed when
/// requested.
fn load_inputs(cfg: &RunConfig) -> Result<(ScoreSeries, EventSeries)> {
    let scores = load_scores(cfg)?;
    let path = cfg
        .events
        .as_ref()
        .ok_or_else(|| tolsig::Error::Config("--events is required".into()))?;
    let load = load_events(path, scores.grid())?;
    if load.duplicates > 0 {
        warn(format!(
            "{}: {} duplicate events collapsed",
            path.display(),
            load.duplicates
        ));
    }
    if load.out_of_range > 0 {
        warn(format!(
            "{}: {} events outside the series range dropped",
            path.display(),
            load.out_of_range
        ));
    }
    let events = load.events;

    if cfg.warmup_mask {
        let skip = cfg.sta_lta.warmup();
        let len = scores.len();
        if skip >= len {
            return Err(tolsig::Error::Degenerate(format!(
                "warm-up mask of {skip} steps leaves nothing of {len} steps"
            ))
            .into());
        }
        return Ok((scores.slice(skip..len)?, events.slice(skip..len)?));
    }
    Ok((scores, events))
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| tolsig::Error::Io {
        path: dir.to_owned(),
        source,
    })?;
    Ok(())
}

fn write_file(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let io_err = |source| tolsig::Error::Io {
        path: path.to_owned(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    body(&mut out).and_then(|_| out.flush()).map_err(io_err)?;
    Ok(())
}

/// Writes `scores.tsv` with `(timestamp, score)` rows.
pub fn cmd_score(cfg: &RunConfig) -> Result<PathBuf> {
    let scores = load_scores(cfg)?;
    prepare_out(&cfg.out)?;
    let path = cfg.out.join("scores.tsv");
    write_file(&path, |out| {
        for (t, z) in scores.scores().iter().enumerate() {
            writeln!(out, "{}\t{}", scores.grid().timestamp(t), format::real(*z))?;
        }
        Ok(())
    })?;
    Ok(path)
}

#[derive(Debug)]
pub struct EvalOutput {
    pub recall: PathBuf,
    pub precision: PathBuf,
    pub sweep: SweepResult,
}

/// Writes `recall.tsv` and `precision.tsv` (rows: quantiles, columns: δ).
pub fn cmd_eval(cfg: &RunConfig) -> Result<EvalOutput> {
    let (scores, events) = load_inputs(cfg)?;
    let result = sweep(&events, &scores, &cfg.quantiles, &cfg.deltas)?;
    prepare_out(&cfg.out)?;
    let recall = cfg.out.join("recall.tsv");
    let precision = cfg.out.join("precision.tsv");
    write_file(&recall, |out| result.recall_table().write(out))?;
    write_file(&precision, |out| result.precision_table().write(out))?;
    Ok(EvalOutput {
        recall,
        precision,
        sweep: result,
    })
}

/// Significance of one sweep cell over all replicates.
#[derive(Clone, Debug, PartialEq)]
pub struct CellSignificance {
    pub quantile: f64,
    pub delta: Tolerance,
    pub recall_tp: usize,
    pub recall_p: f64,
    pub precision_tp: usize,
    pub precision_p: f64,
}

#[derive(Debug)]
pub struct SimulateOutput {
    pub files: Vec<PathBuf>,
    pub significance: Vec<CellSignificance>,
}

/// Writes `simul-recalls-d{δ}.tsv` and `simul-precisions-d{δ}.tsv` per
/// tolerance and returns per-cell p-values over all replicates.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<SimulateOutput> {
    let (scores, events) = load_inputs(cfg)?;
    let observed = sweep(&events, &scores, &cfg.quantiles, &cfg.deltas)?;
    let sim = simulate_sweep(&events, &scores, &cfg.quantiles, &cfg.deltas, &cfg.plan)?;
    let curves = cfg.curves.min(sim.replicates());
    prepare_out(&cfg.out)?;

    let mut files = Vec::new();
    for (di, delta) in cfg.deltas.iter().enumerate() {
        let rows = 0..cfg.quantiles.len();
        let recall = CurveTable {
            quantiles: cfg.quantiles.clone(),
            simulated: rows
                .clone()
                .map(|qi| (0..curves).map(|r| sim.recall(r, qi, di)).collect())
                .collect(),
            observed: rows
                .clone()
                .map(|qi| observed.cell(qi, di).recall)
                .collect(),
        };
        let precision = CurveTable {
            quantiles: cfg.quantiles.clone(),
            simulated: rows
                .clone()
                .map(|qi| (0..curves).map(|r| sim.precision(r, qi, di)).collect())
                .collect(),
            observed: rows.map(|qi| observed.cell(qi, di).precision).collect(),
        };
        for (name, table) in [("recalls", recall), ("precisions", precision)] {
            let path = cfg.out.join(format!("simul-{name}-d{delta}.tsv"));
            write_file(&path, |out| table.write(out))?;
            files.push(path);
        }
    }

    let mut significance = Vec::new();
    for qi in 0..cfg.quantiles.len() {
        for (di, &delta) in cfg.deltas.iter().enumerate() {
            let cell = observed.cell(qi, di);
            let null = sim.null(qi, di)?;
            significance.push(CellSignificance {
                quantile: cell.quantile,
                delta,
                recall_tp: cell.prediction.true_positives,
                recall_p: mc_pvalue(
                    &null.prediction_tolerant,
                    cell.prediction.true_positives as u64,
                ),
                precision_tp: cell.ground.true_positives,
                precision_p: mc_pvalue(&null.ground_tolerant, cell.ground.true_positives as u64),
            });
        }
    }
    Ok(SimulateOutput {
        files,
        significance,
    })
}

/// Tab-separated p-value summary printed by `simulate`.
pub fn write_significance<W: Write>(
    mut out: W,
    cells: &[CellSignificance],
    replicates: usize,
) -> std::io::Result<()> {
    writeln!(
        out,
        "# quantile\tdelta\tPAd-AA\tp_recall\tPA-AAd\tp_precision"
    )?;
    for c in cells {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            format::real(c.quantile),
            c.delta,
            c.recall_tp,
            format_pvalue(c.recall_p, replicates),
            c.precision_tp,
            format_pvalue(c.precision_p, replicates)
        )?;
    }
    Ok(())
}

#[derive(Debug)]
pub struct NulldistOutput {
    pub recall_distribution: PathBuf,
    pub precision_distribution: PathBuf,
    pub report_path: PathBuf,
    pub report: NullReport,
}

fn summarize(null: &NullDistribution, observed: Option<ObservedStat>) -> Result<SideSummary> {
    let fit = binomial_fit_diagnostics(null)?;
    Ok(SideSummary {
        n_trials: null.n_trials() as u64,
        p_hat: null.p_hat(),
        ks_distance: fit.ks_distance,
        dispersion_ratio: fit.dispersion_ratio,
        observed,
    })
}

/// Null distributions of both true-positive counts at one `(δ, quantile)`
/// cell, their binomial fits, and (with `observed_from_data`) the observed
/// counts with Monte Carlo p-values.
pub fn cmd_nulldist(
    cfg: &RunConfig,
    delta: Tolerance,
    quantile: f64,
    observed_from_data: bool,
) -> Result<NulldistOutput> {
    if cfg.plan.replicates() < RECOMMENDED_REPLICATES {
        warn(format!(
            "{} replicates; at least {RECOMMENDED_REPLICATES} are recommended",
            cfg.plan.replicates()
        ));
    }
    let (scores, events) = load_inputs(cfg)?;
    let tau = resolve_threshold(&scores, Threshold::quantile(quantile)?)?;
    let preds = predict(&scores, tau);
    let null = simulate_null(&events, &preds, delta, &cfg.plan)?;

    let (recall_obs, precision_obs) = if observed_from_data {
        let prediction = confusion_prediction_tolerant(&events, &preds, delta)?;
        let ground = confusion_ground_tolerant(&events, &preds, delta)?;
        let stat = |tp: usize, measure, null: &NullDistribution| ObservedStat {
            true_positives: tp as u64,
            measure,
            p_value: mc_pvalue(null, tp as u64),
        };
        (
            Some(stat(
                prediction.true_positives,
                recall_tolerant(&prediction)?,
                &null.prediction_tolerant,
            )),
            Some(stat(
                ground.true_positives,
                precision_tolerant(&ground)?,
                &null.ground_tolerant,
            )),
        )
    } else {
        (None, None)
    };

    let report = NullReport {
        delta: delta.0,
        quantile,
        tau,
        steps: scores.len(),
        replicates: cfg.plan.replicates(),
        seed: cfg.plan.seed(),
        recall: summarize(null.get(Side::PredictionTolerant), recall_obs)?,
        precision: summarize(null.get(Side::GroundTolerant), precision_obs)?,
    };

    prepare_out(&cfg.out)?;
    let recall_distribution = cfg.out.join(format!("recall-distrib-d{delta}.tsv"));
    let precision_distribution = cfg.out.join(format!("precision-distrib-d{delta}.tsv"));
    let report_path = cfg.out.join(format!("nulldist-d{delta}-report.tsv"));
    write_file(&recall_distribution, |out| {
        null.prediction_tolerant.write_table(out)
    })?;
    write_file(&precision_distribution, |out| {
        null.ground_tolerant.write_table(out)
    })?;
    write_file(&report_path, |out| report.write(out))
        .with_context(|| format!("writing report for delta={delta}"))?;

    Ok(NulldistOutput {
        recall_distribution,
        precision_distribution,
        report_path,
        report,
    })
}
