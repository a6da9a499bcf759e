//! Replicate scheduling. Results are always returned in replicate order, so
//! the worker count never changes an outcome.

use rayon::prelude::*;

use crate::error::{invalid, Result};

pub fn map_replicates<T, F>(count: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    if workers <= 1 {
        return (0..count as u64).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| invalid(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| (0..count as u64).into_par_iter().map(f).collect())
}
