// SPDX-License-Identifier: Apache-2.0

//! Synthetic data shared by the CLI and acceptance tests.

#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Non-negative count-like series: a positive AR(1) level with occasional
/// bursts, similar in texture to a daily message volume.
pub fn bursty_series(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut level = 0.0f64;
    let mut burst = 0.0f64;
    (0..len)
        .map(|_| {
            level = 0.9 * level + noise.sample(&mut rng);
            burst *= 0.6;
            if rng.random::<f64>() < 0.02 {
                burst += 40.0 * rng.random::<f64>();
            }
            (20.0 + 3.0 * level + burst).max(0.0).round()
        })
        .collect()
}

/// `count` distinct positions in `0..len`, sorted.
pub fn random_positions(len: usize, count: usize, seed: u64) -> Vec<usize> {
    let mut v = sample(&mut rng(seed), len, count).into_vec();
    v.sort_unstable();
    v
}

pub fn write_series(path: &Path, values: &[f64]) -> PathBuf {
    let mut text = String::new();
    for (t, v) in values.iter().enumerate() {
        writeln!(text, "{t}\t{v}").unwrap();
    }
    std::fs::write(path, text).unwrap();
    path.to_owned()
}

pub fn write_events(path: &Path, positions: &[usize]) -> PathBuf {
    let text: String = positions.iter().map(|p| format!("{p}\n")).collect();
    std::fs::write(path, text).unwrap();
    path.to_owned()
}
