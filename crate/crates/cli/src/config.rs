// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use tolsig::{Error, PermutationPlan, StaLtaConfig, Tolerance};

use crate::args::{
    EvalArgs, InputArgs, NulldistArgs, PlanArgs, ScoreArgs, SimulateArgs, SweepAxes,
};

/// Where anomaly scores come from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScoringInput {
    /// Raw series scored with STA/LTA.
    Series(PathBuf),
    /// Precomputed scores.
    Scores(PathBuf),
}

/// Everything a command needs, validated.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scoring: ScoringInput,
    pub events: Option<PathBuf>,
    pub sta_lta: StaLtaConfig,
    pub quantiles: Vec<f64>,
    pub deltas: Vec<Tolerance>,
    pub plan: PermutationPlan,
    pub out: PathBuf,
    pub warmup_mask: bool,
    /// Replicate curves written by `simulate`.
    pub curves: usize,
}

impl RunConfig {
    /// Defaults for everything except the inputs and output directory.
    pub fn new(scoring: ScoringInput, events: Option<PathBuf>, out: PathBuf) -> Self {
        Self {
            scoring,
            events,
            sta_lta: StaLtaConfig::default(),
            quantiles: default_quantiles(),
            deltas: [0, 1, 2, 4].map(Tolerance).to_vec(),
            plan: PermutationPlan::default(),
            out,
            warmup_mask: false,
            curves: 100,
        }
    }

    pub fn from_score_args(args: &ScoreArgs) -> Result<Self, Error> {
        let mut cfg = Self::new(
            ScoringInput::Series(args.series.clone()),
            None,
            args.out.clone(),
        );
        cfg.sta_lta = StaLtaConfig::new(args.sta_lta.sta, args.sta_lta.lta)?;
        Ok(cfg)
    }

    pub fn from_eval_args(args: &EvalArgs) -> Result<Self, Error> {
        let mut cfg = Self::from_input(&args.input)?;
        cfg.apply_axes(&args.axes)?;
        Ok(cfg)
    }

    pub fn from_simulate_args(args: &SimulateArgs) -> Result<Self, Error> {
        let mut cfg = Self::from_input(&args.input)?;
        cfg.apply_axes(&args.axes)?;
        cfg.plan = plan(&args.plan)?;
        cfg.curves = args.curves;
        Ok(cfg)
    }

    pub fn from_nulldist_args(args: &NulldistArgs) -> Result<Self, Error> {
        let mut cfg = Self::from_input(&args.input)?;
        cfg.plan = plan(&args.plan)?;
        cfg.deltas = vec![Tolerance(args.delta)];
        cfg.quantiles = vec![args.quantile];
        check_levels(&cfg.quantiles)?;
        Ok(cfg)
    }

    fn from_input(input: &InputArgs) -> Result<Self, Error> {
        let scoring = match (&input.series, &input.scores) {
            (Some(series), None) => ScoringInput::Series(series.clone()),
            (None, Some(scores)) => ScoringInput::Scores(scores.clone()),
            _ => {
                return Err(Error::Config(
                    "exactly one of --series and --scores is required".into(),
                ))
            }
        };
        let mut cfg = Self::new(scoring, Some(input.events.clone()), input.out.clone());
        cfg.sta_lta = StaLtaConfig::new(input.sta_lta.sta, input.sta_lta.lta)?;
        cfg.warmup_mask = input.warmup_mask;
        Ok(cfg)
    }

    fn apply_axes(&mut self, axes: &SweepAxes) -> Result<(), Error> {
        if let Some(list) = &axes.quantiles {
            self.quantiles = parse_quantiles(list)?;
        }
        self.deltas = parse_deltas(&axes.deltas)?;
        Ok(())
    }
}

fn plan(args: &PlanArgs) -> Result<PermutationPlan, Error> {
    PermutationPlan::new(args.replicates, args.seed, args.chunks)
}

/// Levels 0, 0.02, ..., 0.98.
pub fn default_quantiles() -> Vec<f64> {
    (0..50).map(|i| i as f64 / 50.0).collect()
}

/// Parses `a,b,c` or `START:END:COUNT` (inclusive, evenly spaced).
pub fn parse_quantiles(list: &str) -> Result<Vec<f64>, Error> {
    let bad = |what: &str| Error::Config(format!("invalid quantile list {list:?}: {what}"));
    let levels = if let [start, end, count] = list.split(':').collect::<Vec<_>>()[..] {
        let start: f64 = start.trim().parse().map_err(|_| bad("start"))?;
        let end: f64 = end.trim().parse().map_err(|_| bad("end"))?;
        let count: usize = count.trim().parse().map_err(|_| bad("count"))?;
        match count {
            0 => Vec::new(),
            1 => vec![start],
            _ => (0..count)
                .map(|i| start + (end - start) * i as f64 / (count - 1) as f64)
                .collect(),
        }
    } else {
        list.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad(s)))
            .collect::<Result<_, _>>()?
    };
    if levels.is_empty() {
        return Err(Error::Config("quantile list is empty".into()));
    }
    check_levels(&levels)?;
    Ok(levels)
}

fn check_levels(levels: &[f64]) -> Result<(), Error> {
    match levels.iter().find(|q| !(0.0..=1.0).contains(*q)) {
        Some(q) => Err(Error::Config(format!("quantile level {q} outside [0, 1]"))),
        None => Ok(()),
    }
}

/// Parses a comma-separated list of non-negative integer tolerances.
pub fn parse_deltas(list: &str) -> Result<Vec<Tolerance>, Error> {
    let deltas = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map(Tolerance)
                .map_err(|_| Error::Config(format!("invalid tolerance {s:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if deltas.is_empty() {
        return Err(Error::Config("tolerance list is empty".into()));
    }
    Ok(deltas)
}
