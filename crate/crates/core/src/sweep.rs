//! Deterministic data-parallel execution of independent tasks.

use std::panic::{catch_unwind, AssertUnwindSafe};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// The splitmix64 finaliser.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of task `index` under the run seed `seed`. Depends only on the
/// pair, never on scheduling.
pub fn task_seed(seed: u64, index: usize) -> u64 {
    seed ^ splitmix64(index as u64)
}

/// A task that panicked.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaskPanic {
    pub index: usize,
    pub message: String,
}

/// Applies `f(index, task)` to every task on a pool of `workers` threads.
/// Results come back in task order; a panic is confined to its own slot.
pub fn parallel_map<T, R, F>(tasks: &[T], workers: usize, f: F) -> Result<Vec<std::result::Result<R, TaskPanic>>>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync,
{
    if workers == 0 {
        return Err(Error::Config("workers must be >= 1".into()));
    }
    let run = |(i, t): (usize, &T)| {
        catch_unwind(AssertUnwindSafe(|| f(i, t))).map_err(|e| TaskPanic {
            index: i,
            message: e
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| e.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "task panicked".into()),
        })
    };
    if workers == 1 || tasks.len() <= 1 {
        return Ok(tasks.iter().enumerate().map(run).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| tasks.par_iter().enumerate().map(run).collect()))
}
