//! Worker pools. Parallel code elsewhere only uses index-ordered collection, so the worker
//! count never changes a result.

use crate::error::{Error, Result};

/// Run `f` on a dedicated pool of `workers` threads (0 = one per core).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::ConfigInvalid(format!("workers: {e}")))?;
    Ok(pool.install(f))
}
