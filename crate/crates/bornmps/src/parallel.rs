//! Deterministic chunked reductions.
//!
//! Row-parallel work always uses fixed chunk boundaries and sums partial
//! results in chunk order, so outputs are bit-identical regardless of whether
//! rayon splits the chunks across threads.

use rayon::prelude::*;

const CHUNK: usize = 2048;
const PARALLEL_THRESHOLD: usize = 4096;

pub(crate) fn sum_chunked<T, F>(items: &[T], f: F) -> f64
where
    T: Sync,
    F: Fn(&T) -> f64 + Sync + Send,
{
    let partials: Vec<f64> = if items.len() >= PARALLEL_THRESHOLD {
        items
            .par_chunks(CHUNK)
            .map(|chunk| chunk.iter().map(&f).sum())
            .collect()
    } else {
        items
            .chunks(CHUNK)
            .map(|chunk| chunk.iter().map(&f).sum())
            .collect()
    };
    partials.iter().sum()
}

pub(crate) fn mean_chunked<T, F>(items: &[T], f: F) -> f64
where
    T: Sync,
    F: Fn(&T) -> f64 + Sync + Send,
{
    debug_assert!(!items.is_empty());
    sum_chunked(items, f) / items.len() as f64
}

/// Accumulates per-item contributions into a vector of length `len`.
pub(crate) fn accumulate_chunked<T, F>(items: &[T], len: usize, f: F) -> Vec<f64>
where
    T: Sync,
    F: Fn(&mut [f64], &T) + Sync + Send,
{
    let fold = |chunk: &[T]| {
        let mut acc = vec![0.0; len];
        for item in chunk {
            f(&mut acc, item);
        }
        acc
    };
    let partials: Vec<Vec<f64>> = if items.len() >= PARALLEL_THRESHOLD {
        items.par_chunks(CHUNK).map(fold).collect()
    } else {
        items.chunks(CHUNK).map(fold).collect()
    };
    let mut total = vec![0.0; len];
    for partial in partials {
        for (t, x) in total.iter_mut().zip(&partial) {
            *t += x;
        }
    }
    total
}

/// Order-preserving per-item map; each result depends on its item alone.
pub(crate) fn map_items<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if items.len() >= PARALLEL_THRESHOLD {
        items.par_iter().map(f).collect()
    } else {
        items.iter().map(f).collect()
    }
}
