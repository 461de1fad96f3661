use rayon::ThreadPoolBuilder;

use crate::error::{Error, Result};

/// Runs `f` on a dedicated pool of `workers` threads; every rayon call made
/// inside `f` uses that pool.
pub fn with_workers<T, F>(workers: usize, f: F) -> Result<T>
where
    F: FnOnce() -> T + Send,
    T: Send,
{
    if workers == 0 {
        return Err(Error::Config("worker count must be at least 1".into()));
    }
    let pool = ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}
