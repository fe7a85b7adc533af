// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use tolsig::significance::{simulate_sweep, PermutationPlan};
use tolsig::{predict, simulate_null, EventSeries, PredictionSeries, ScoreSeries, Side, Tolerance};

/// All `k`-subsets of `0..n`.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Both true-positive counts by direct window scan.
fn brute_tp(events: &[bool], preds: &[bool], delta: usize) -> (u32, u32) {
    let n = events.len() as i64;
    let near = |flags: &[bool], t: i64| {
        (t - delta as i64..=t + delta as i64).any(|u| u >= 0 && u < n && flags[u as usize])
    };
    let ground = (0..n)
        .filter(|&t| preds[t as usize] && near(events, t))
        .count();
    let prediction = (0..n)
        .filter(|&t| events[t as usize] && near(preds, t))
        .count();
    (ground as u32, prediction as u32)
}

/// Exact null pmf of both counts over all arrangements of `events` ones.
fn exact_null(len: usize, events: usize, preds: &[bool], delta: usize) -> [BTreeMap<u32, f64>; 2] {
    let arrangements = combinations(len, events);
    let weight = 1.0 / arrangements.len() as f64;
    let mut pmfs = [BTreeMap::new(), BTreeMap::new()];
    for positions in arrangements {
        let mut flags = vec![false; len];
        positions.iter().for_each(|&p| flags[p] = true);
        let (g, r) = brute_tp(&flags, preds, delta);
        *pmfs[0].entry(g).or_insert(0.0) += weight;
        *pmfs[1].entry(r).or_insert(0.0) += weight;
    }
    pmfs
}

fn frequencies(samples: &[u32]) -> BTreeMap<u32, usize> {
    let mut out = BTreeMap::new();
    for &s in samples {
        *out.entry(s).or_insert(0) += 1;
    }
    out
}

fn assert_within_sigma(pmf: &BTreeMap<u32, f64>, samples: &[u32], sigmas: f64) {
    let n = samples.len() as f64;
    let observed = frequencies(samples);
    for k in observed.keys() {
        assert!(
            pmf.contains_key(k),
            "simulated value {k} outside exact support"
        );
    }
    for (k, &p) in pmf {
        let count = *observed.get(k).unwrap_or(&0) as f64;
        let sd = (n * p * (1.0 - p)).sqrt();
        assert!(
            (count - n * p).abs() <= sigmas * sd,
            "k={k}: {count} observed vs {} expected (sd {sd})",
            n * p
        );
    }
}

fn bits(s: &str) -> Vec<bool> {
    s.bytes().map(|b| b == b'1').collect()
}

#[test]
fn exhaustive_oracle_small_grids() {
    let cases = [
        ("00110000", 2, 1),
        ("100000000001", 3, 1),
        ("0110000100", 1, 2),
        ("011000010010", 3, 0),
    ];
    for (preds, n_events, delta) in cases {
        let preds = bits(preds);
        let len = preds.len();
        let mut events = vec![false; len];
        events[..n_events].iter_mut().for_each(|f| *f = true);
        let e = EventSeries::from_flags(events).unwrap();
        let p = PredictionSeries::from_flags(preds.clone()).unwrap();
        let plan = PermutationPlan::new(100_000, 2024, 8).unwrap();
        let pair = simulate_null(&e, &p, Tolerance(delta), &plan).unwrap();
        let [ground, prediction] = exact_null(len, n_events, &preds, delta);
        assert_within_sigma(&ground, pair.ground_tolerant.samples(), 4.0);
        assert_within_sigma(&prediction, pair.prediction_tolerant.samples(), 4.0);
    }
}

#[test]
fn eight_steps_two_events() {
    // 28 arrangements, 28 000 replicates, 3σ per support point.
    let preds = bits("01000110");
    let e = EventSeries::from_flags(bits("11000000")).unwrap();
    let p = PredictionSeries::from_flags(preds.clone()).unwrap();
    let plan = PermutationPlan::new(28 * 1000, 5, 4).unwrap();
    let pair = simulate_null(&e, &p, Tolerance(1), &plan).unwrap();
    let [ground, prediction] = exact_null(8, 2, &preds, 1);
    assert_within_sigma(&ground, pair.ground_tolerant.samples(), 3.0);
    assert_within_sigma(&prediction, pair.prediction_tolerant.samples(), 3.0);
}

#[test]
fn seed_determinism_and_chunk_invariance() {
    let e = EventSeries::from_flags((0..300).map(|t| t % 17 == 3).collect()).unwrap();
    let p = PredictionSeries::from_flags((0..300).map(|t| (t / 5) % 7 == 0).collect()).unwrap();
    let base = PermutationPlan::new(2_000, 77, 1).unwrap();
    let reference = simulate_null(&e, &p, Tolerance(2), &base).unwrap();
    for chunks in [1, 4, 16] {
        let plan = base.with_parallel_chunks(chunks).unwrap();
        assert_eq!(
            simulate_null(&e, &p, Tolerance(2), &plan).unwrap(),
            reference
        );
    }
    let other = PermutationPlan::new(2_000, 78, 1).unwrap();
    assert_ne!(
        simulate_null(&e, &p, Tolerance(2), &other).unwrap(),
        reference
    );
}

#[test]
fn sweep_simulation_matches_single_cell_simulation() {
    let len = 400;
    let scores: Vec<f64> = (0..len)
        .map(|t| ((t * 37) % 101) as f64 + (t % 9) as f64 * 0.5)
        .collect();
    let scores = ScoreSeries::from_values(scores).unwrap();
    let e = EventSeries::from_flags((0..len).map(|t| t % 23 == 0).collect()).unwrap();
    let quantiles = [0.5, 0.8, 0.95];
    let deltas = [Tolerance(0), Tolerance(2), Tolerance(5)];
    let plan = PermutationPlan::new(500, 9, 5).unwrap();
    let sim = simulate_sweep(&e, &scores, &quantiles, &deltas, &plan).unwrap();

    for (qi, &tau) in sim.taus().iter().enumerate() {
        let p = predict(&scores, tau);
        for (di, &d) in deltas.iter().enumerate() {
            let single = simulate_null(&e, &p, d, &plan).unwrap();
            assert_eq!(sim.null(qi, di).unwrap(), single);
            let r0 = sim.true_positives(0, qi, di, Side::PredictionTolerant) as f64;
            assert_eq!(sim.recall(0, qi, di), Some(r0 / e.count() as f64));
        }
    }
}
