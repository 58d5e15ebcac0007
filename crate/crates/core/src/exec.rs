//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the helpers dispatch to rayon unless
//! [`set_parallel`] turned it off; without the feature everything runs on the
//! calling thread. Results are always returned in input order.

use std::sync::atomic::{AtomicBool, Ordering};

static PARALLEL: AtomicBool = AtomicBool::new(cfg!(feature = "parallel"));

/// Enable or disable parallel execution. No effect without the `parallel`
/// feature.
pub fn set_parallel(enabled: bool) {
    PARALLEL.store(enabled && cfg!(feature = "parallel"), Ordering::Relaxed);
}

pub fn is_parallel() -> bool {
    PARALLEL.load(Ordering::Relaxed)
}

pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    items.iter().map(f).collect()
}

/// First item (in input order) for which `f` returns `Some`.
pub fn find_map_first<T, R, F>(items: &[T], f: F) -> Option<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Option<R> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().find_map_first(f);
    }
    items.iter().find_map(f)
}

/// `Ok` if `f` succeeds on every item, otherwise the error of the first
/// failing item in input order.
pub fn try_for_each<T, E, F>(items: &[T], f: F) -> Result<(), E>
where
    T: Sync,
    E: Send,
    F: Fn(&T) -> Result<(), E> + Sync + Send,
{
    match find_map_first(items, |t| f(t).err()) {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
