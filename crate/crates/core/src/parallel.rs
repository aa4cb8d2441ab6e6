//! Trial fan-out.
//!
//! With the `parallel` feature (default) trials are spread over the rayon
//! pool; without it they run on the calling thread. Reductions used by the
//! engines are integer sums and `max`, so the result never depends on how
//! trials were grouped.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `range` and folds the results with `reduce`.
///
/// `reduce` must be associative and commutative with `identity` as neutral
/// element.
pub fn map_reduce<T, F, R>(range: Range<u64>, identity: T, f: F, reduce: R) -> T
where
    T: Send + Sync + Clone,
    F: Fn(u64) -> T + Send + Sync,
    R: Fn(T, T) -> T + Send + Sync,
{
    #[cfg(feature = "parallel")]
    {
        range
            .into_par_iter()
            .map(f)
            .reduce(|| identity.clone(), &reduce)
    }
    #[cfg(not(feature = "parallel"))]
    {
        range.map(f).fold(identity, reduce)
    }
}

/// Runs `op` with `threads` workers (0 = library default).
///
/// A no-op wrapper in sequential builds.
pub fn with_threads<T: Send>(threads: usize, op: impl FnOnce() -> T + Send) -> T {
    #[cfg(feature = "parallel")]
    {
        if threads == 0 {
            return op();
        }
        match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(op),
            Err(_) => op(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        op()
    }
}

/// Whether this build fans trials out across threads.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
