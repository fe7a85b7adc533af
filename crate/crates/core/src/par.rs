// SPDX-License-Identifier: Apache-2.0

//! Chunked map with a rayon backend and a sequential fallback.
//!
//! Work is split into contiguous index ranges and the per-range outputs are
//! concatenated in range order, so the result never depends on scheduling.

use std::ops::Range;

/// Splits `0..len` into at most `chunks` contiguous ranges of near-equal size.
pub(crate) fn split(len: usize, chunks: usize) -> Vec<Range<usize>> {
    let chunks = chunks.clamp(1, len.max(1));
    let base = len / chunks;
    let extra = len % chunks;
    let mut start = 0;
    (0..chunks)
        .map(|c| {
            let size = base + usize::from(c < extra);
            let range = start..start + size;
            start += size;
            range
        })
        .collect()
}

/// Applies `work` to each range and concatenates the outputs in order.
pub(crate) fn map_ranges<T, F>(len: usize, chunks: usize, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> Vec<T> + Sync + Send,
{
    let ranges = split(len, chunks);

    #[cfg(feature = "parallel")]
    let parts: Vec<Vec<T>> = {
        use rayon::prelude::*;
        ranges.into_par_iter().map(&work).collect()
    };

    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Vec<T>> = ranges.into_iter().map(&work).collect();

    let mut out = Vec::with_capacity(len);
    for part in parts {
        out.extend(part);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_covers_range_in_order() {
        for len in 0..40 {
            for chunks in 1..12 {
                let ranges = split(len, chunks);
                let flat: Vec<usize> = ranges.iter().cloned().flatten().collect();
                assert_eq!(flat, (0..len).collect::<Vec<_>>());
                assert!(ranges.len() <= chunks.max(1));
            }
        }
    }

    #[test]
    fn map_ranges_is_order_preserving() {
        let out = map_ranges(1000, 7, |r| r.map(|i| i * 2).collect());
        assert_eq!(out, (0..1000).map(|i| i * 2).collect::<Vec<_>>());
    }
}
