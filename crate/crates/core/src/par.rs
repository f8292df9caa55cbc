//! Data-parallel helpers. With the `parallel` feature these run on a rayon
//! pool; without it they degrade to plain sequential loops. Every helper
//! returns results in input order, so callers stay schedule-independent.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `items`, preserving order.
#[cfg(feature = "parallel")]
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Maps `f` over `items` with mutable access, preserving order.
#[cfg(feature = "parallel")]
pub fn map_mut<T, R, F>(items: &mut [T], f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(&mut T) -> R + Sync + Send,
{
    items.par_iter_mut().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_mut<T, R, F>(items: &mut [T], f: F) -> Vec<R>
where
    F: Fn(&mut T) -> R,
{
    items.iter_mut().map(f).collect()
}

/// Runs `op` with at most `workers` threads available to [`map`].
#[cfg(feature = "parallel")]
pub fn with_workers<R, F>(workers: usize, op: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    let workers = workers.max(1);
    if workers == rayon::current_num_threads() {
        return op();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(op),
        // Thread spawning can fail under tight limits; results do not depend
        // on the pool, only throughput does.
        Err(_) => op(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_workers<R, F>(_workers: usize, op: F) -> R
where
    F: FnOnce() -> R,
{
    op()
}

/// Splits `0..count` into at most `workers` contiguous, near-equal ranges.
/// Worker `i` owns `ranges[i]`; earlier workers get the extra item when the
/// split is uneven.
pub fn schedule(count: usize, workers: usize) -> Vec<Range<usize>> {
    let workers = workers.max(1).min(count.max(1));
    let base = count / workers;
    let extra = count % workers;
    let mut start = 0;
    (0..workers)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .filter(|r| !r.is_empty())
        .collect()
}

/// Applies `f` to every index in `0..count`, with each worker walking its own
/// contiguous range. Output is in index order.
pub fn map_contiguous<R, F>(count: usize, workers: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    let ranges = schedule(count, workers);
    with_workers(workers, || {
        map(&ranges, |r| r.clone().map(&f).collect::<Vec<R>>())
            .into_iter()
            .flatten()
            .collect()
    })
}
