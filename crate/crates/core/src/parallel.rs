//! Replica-parallel execution with deterministic ordering.
//!
//! Replica `i` always runs on stream `stream_lo + i`, and results come back
//! in replica order, so any reduction over them is independent of the
//! thread count.

use rayon::prelude::*;

use crate::rng::RngStream;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "SV_PROCESS_THREADS";

/// Thread cap requested through `SV_PROCESS_THREADS`, if any.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Configure the global rayon pool from `SV_PROCESS_THREADS`. Calling it
/// more than once, or after the pool has started, is harmless.
pub fn init_thread_pool() {
    if let Some(n) = thread_cap() {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Run `n` replicas of `f`.
pub fn run_replicas<T, F>(seed: u64, stream_lo: u64, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut RngStream) -> T + Sync + Send,
{
    (0..n as u64)
        .into_par_iter()
        .map(|i| f(&mut RngStream::new(seed, stream_lo + i)))
        .collect()
}

/// Run `points.len() * per_point` replicas, grouped by point. Point `j`
/// gets streams `stream_lo + j * per_point ..`.
pub fn run_grid<P, T, F>(seed: u64, stream_lo: u64, points: &[P], per_point: usize, f: F) -> Vec<Vec<T>>
where
    P: Sync,
    T: Send,
    F: Fn(&P, &mut RngStream) -> T + Sync + Send,
{
    let total = points.len() * per_point;
    let flat: Vec<T> = (0..total as u64)
        .into_par_iter()
        .map(|i| {
            let p = &points[(i / per_point as u64) as usize];
            f(p, &mut RngStream::new(seed, stream_lo + i))
        })
        .collect();
    let mut out = Vec::with_capacity(points.len());
    let mut it = flat.into_iter();
    for _ in 0..points.len() {
        out.push(it.by_ref().take(per_point).collect());
    }
    out
}
