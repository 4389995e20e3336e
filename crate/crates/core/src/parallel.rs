//! Fixed-chunk parallelism.
//!
//! Work is always split into [`CHUNKS`] pieces, each with its own random
//! stream, and reduced in chunk order. The thread count only decides how the
//! pieces are scheduled, so results do not depend on it.

use rayon::prelude::*;

use crate::error::{invalid, Result};

pub const CHUNKS: usize = 64;

/// Runs `f(0..CHUNKS)` and returns the results in chunk order.
pub fn chunked<R: Send>(f: impl Fn(usize) -> R + Sync + Send) -> Vec<R> {
    (0..CHUNKS).into_par_iter().map(f).collect()
}

/// Share of `total` assigned to chunk `i`.
pub fn quota(total: usize, i: usize) -> usize {
    total / CHUNKS + usize::from(i < total % CHUNKS)
}

/// Runs `f` on a dedicated pool of `threads` workers.
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| invalid("threads", e.to_string()))?;
    Ok(pool.install(f))
}
