//! Data-parallel trial loops with a sequential fallback.
//!
//! With the `parallel` feature (default) trial loops run on rayon; without
//! it they run sequentially. Results are identical either way: every trial
//! draws from its own substream and reductions are order-independent, so
//! output does not depend on the worker count or scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over trial indices `0..n`, preserving order.
#[cfg(feature = "parallel")]
pub fn map_trials<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Map `f` over trial indices `0..n`, preserving order.
#[cfg(not(feature = "parallel"))]
pub fn map_trials<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Map `f` over a slice of items, preserving order.
#[cfg(feature = "parallel")]
pub fn map_items<I, T, F>(items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    items.par_iter().map(f).collect()
}

/// Map `f` over a slice of items, preserving order.
#[cfg(not(feature = "parallel"))]
pub fn map_items<I, T, F>(items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    items.iter().map(f).collect()
}

/// Run `f` inside a thread pool of the requested size. `None` uses the
/// global pool (or plain sequential execution without the `parallel`
/// feature).
#[cfg(feature = "parallel")]
pub fn with_workers<R, F>(workers: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .expect("failed to build thread pool")
            .install(f),
        None => f(),
    }
}

/// Run `f`; the worker count is ignored in sequential builds.
#[cfg(not(feature = "parallel"))]
pub fn with_workers<R, F>(workers: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    let _ = workers;
    f()
}
