// SPDX-License-Identifier: Apache-2.0

//! Text formats written by `simulate` and `nulldist`.

use std::io::{BufRead, Write};

use anyhow::{anyhow, bail, Context, Result};
use tolsig::format;

/// Observed true positives and their significance for one statistic.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservedStat {
    pub true_positives: u64,
    pub measure: Option<f64>,
    pub p_value: f64,
}

/// Fit of one simulated null distribution to its binomial.
#[derive(Clone, Debug, PartialEq)]
pub struct SideSummary {
    pub n_trials: u64,
    pub p_hat: f64,
    pub ks_distance: f64,
    pub dispersion_ratio: Option<f64>,
    pub observed: Option<ObservedStat>,
}

impl SideSummary {
    pub fn overdispersed(&self) -> bool {
        self.dispersion_ratio.is_some_and(|r| r > 1.0)
    }
}

/// Summary written by `nulldist`.
#[derive(Clone, Debug, PartialEq)]
pub struct NullReport {
    pub delta: usize,
    pub quantile: f64,
    pub tau: f64,
    pub steps: usize,
    pub replicates: usize,
    pub seed: u64,
    /// Prediction-tolerant true positives `PAδ-AA`.
    pub recall: SideSummary,
    /// Ground-tolerant true positives `PA-AAδ`.
    pub precision: SideSummary,
}

/// `< 1/(N+1)` when the observed count beats every replicate.
pub fn format_pvalue(p: f64, replicates: usize) -> String {
    let floor = 1.0 / (replicates + 1) as f64;
    if p <= floor {
        format!("< 1/{}", replicates + 1)
    } else {
        format::real(p)
    }
}

fn parse_pvalue(s: &str, replicates: usize) -> Result<f64> {
    if s.starts_with('<') {
        Ok(1.0 / (replicates + 1) as f64)
    } else {
        s.parse().with_context(|| format!("invalid p-value {s:?}"))
    }
}

impl NullReport {
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# permutation null distributions of true positives")?;
        writeln!(out, "delta\t{}", self.delta)?;
        writeln!(out, "quantile\t{}", format::real(self.quantile))?;
        writeln!(out, "tau\t{}", format::real(self.tau))?;
        writeln!(out, "steps\t{}", self.steps)?;
        writeln!(out, "replicates\t{}", self.replicates)?;
        writeln!(out, "seed\t{}", self.seed)?;
        writeln!(out, "events (AA)\t{}", self.recall.n_trials)?;
        writeln!(out, "predictions (PA)\t{}", self.precision.n_trials)?;
        self.write_side(&mut out, "recall", "PAd-AA", "R_delta", &self.recall)?;
        self.write_side(&mut out, "precision", "PA-AAd", "P_delta", &self.precision)
    }

    fn write_side<W: Write>(
        &self,
        out: &mut W,
        name: &str,
        tp_label: &str,
        measure_label: &str,
        side: &SideSummary,
    ) -> std::io::Result<()> {
        if let Some(obs) = &side.observed {
            writeln!(out, "{tp_label}\t{}", obs.true_positives)?;
            writeln!(out, "{measure_label}\t{}", format::measure(obs.measure))?;
            writeln!(
                out,
                "p_{name}\t{}",
                format_pvalue(obs.p_value, self.replicates)
            )?;
        }
        writeln!(out, "p_hat_{name}\t{}", format::real(side.p_hat))?;
        writeln!(out, "ks_{name}\t{}", format::real(side.ks_distance))?;
        write!(
            out,
            "dispersion_{name}\t{}",
            format::measure(side.dispersion_ratio)
        )?;
        if side.overdispersed() {
            write!(out, "\toverdispersed")?;
        }
        writeln!(out)
    }

    pub fn parse<R: BufRead>(reader: R) -> Result<NullReport> {
        let mut map = std::collections::HashMap::new();
        for line in reader.lines() {
            let line = line?;
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let mut cols = line.split('\t');
            let key = cols.next().unwrap_or_default().to_owned();
            let value = cols
                .next()
                .ok_or_else(|| anyhow!("missing value for {key}"))?;
            map.insert(key, value.to_owned());
        }
        let get = |k: &str| {
            map.get(k)
                .map(String::as_str)
                .ok_or_else(|| anyhow!("missing {k}"))
        };
        let num = |k: &str| -> Result<f64> { Ok(get(k)?.parse()?) };
        let int = |k: &str| -> Result<u64> { Ok(get(k)?.parse()?) };
        let measure = |k: &str| -> Result<Option<f64>> {
            format::parse_measure(get(k)?).ok_or_else(|| anyhow!("invalid {k}"))
        };

        let replicates = int("replicates")? as usize;
        let side = |name: &str, tp: &str, m: &str, n_trials: u64| -> Result<SideSummary> {
            let observed = match map.get(tp) {
                None => None,
                Some(_) => Some(ObservedStat {
                    true_positives: int(tp)?,
                    measure: measure(m)?,
                    p_value: parse_pvalue(get(&format!("p_{name}"))?, replicates)?,
                }),
            };
            Ok(SideSummary {
                n_trials,
                p_hat: num(&format!("p_hat_{name}"))?,
                ks_distance: num(&format!("ks_{name}"))?,
                dispersion_ratio: measure(&format!("dispersion_{name}"))?,
                observed,
            })
        };
        Ok(NullReport {
            delta: int("delta")? as usize,
            quantile: num("quantile")?,
            tau: num("tau")?,
            steps: int("steps")? as usize,
            replicates,
            seed: int("seed")?,
            recall: side("recall", "PAd-AA", "R_delta", int("events (AA)")?)?,
            precision: side("precision", "PA-AAd", "P_delta", int("predictions (PA)")?)?,
        })
    }
}

/// Simulated measure curves for one tolerance: rows are quantile levels,
/// columns the replicate curves followed by the observed curve.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveTable {
    pub quantiles: Vec<f64>,
    /// `simulated[row][replicate]`.
    pub simulated: Vec<Vec<Option<f64>>>,
    pub observed: Vec<Option<f64>>,
}

impl CurveTable {
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "# quantile")?;
        for i in 1..=self.simulated.first().map_or(0, Vec::len) {
            write!(out, "\tsim{i}")?;
        }
        writeln!(out, "\tobserved")?;
        for ((q, sims), obs) in self
            .quantiles
            .iter()
            .zip(&self.simulated)
            .zip(&self.observed)
        {
            write!(out, "{}", format::real(*q))?;
            for s in sims {
                write!(out, "\t{}", format::measure(*s))?;
            }
            writeln!(out, "\t{}", format::measure(*obs))?;
        }
        Ok(())
    }

    pub fn parse<R: BufRead>(reader: R) -> Result<CurveTable> {
        let mut table = CurveTable {
            quantiles: Vec::new(),
            simulated: Vec::new(),
            observed: Vec::new(),
        };
        for line in reader.lines() {
            let line = line?;
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let mut values = Vec::new();
            for field in line.split('\t') {
                values.push(
                    format::parse_measure(field).ok_or_else(|| anyhow!("bad field {field:?}"))?,
                );
            }
            if values.len() < 2 {
                bail!("curve row needs a quantile and an observed value");
            }
            let q = values.remove(0).ok_or_else(|| anyhow!("quantile is nan"))?;
            let observed = values.pop().expect("checked length");
            table.quantiles.push(q);
            table.simulated.push(values);
            table.observed.push(observed);
        }
        Ok(table)
    }
}
