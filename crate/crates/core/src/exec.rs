//! Order-preserving parallel map over trial indices.

use rayon::prelude::*;

/// Evaluate `f(0..count)` on `workers` threads (all cores when `None`),
/// returning results in index order.
pub fn map_indexed<R, E, F>(count: u64, workers: Option<usize>, f: F) -> Result<Vec<R>, E>
where
    R: Send,
    E: Send,
    F: Fn(u64) -> Result<R, E> + Sync + Send,
{
    let run = || (0..count).into_par_iter().map(&f).collect::<Result<Vec<R>, E>>();
    match workers {
        Some(1) => (0..count).map(&f).collect(),
        Some(w) => match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
            Ok(pool) => pool.install(run),
            Err(_) => run(),
        },
        None => run(),
    }
}
