//! Data-parallel execution with a sequential fallback.
//!
//! All Monte Carlo loops go through [`map_indexed`], which returns results in
//! index order regardless of how the work was scheduled. Reductions happen
//! afterwards on the ordered vector, so tables do not depend on the number of
//! worker threads. Without the `parallel` feature everything runs inline.

use std::ops::Range;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// `f(i)` for every `i` in `range`, in order.
pub fn map_indexed<T, F>(exec: Exec, range: Range<u64>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return range.into_par_iter().map(f).collect();
    }
    let _ = exec;
    range.map(f).collect()
}

/// Like [`map_indexed`] but with per-worker scratch state created by `init`.
pub fn map_indexed_with<S, T, I, F>(exec: Exec, range: Range<u64>, init: I, f: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return range.into_par_iter().map_init(&init, |s, i| f(s, i)).collect();
    }
    let _ = exec;
    let mut scratch = init();
    range.map(|i| f(&mut scratch, i)).collect()
}

/// Run `op` on a pool of `workers` threads (or the global pool when `None`).
pub fn with_workers<R: Send>(workers: Option<usize>, op: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if let Some(k) = workers {
        match rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build() {
            Ok(pool) => return pool.install(op),
            Err(e) => log::warn!("could not build a {k}-thread pool ({e}); using the global pool"),
        }
    }
    let _ = workers;
    op()
}

pub fn available_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let seq = map_indexed(Exec::Sequential, 0..500, |i| i * i);
        let par = map_indexed(Exec::Parallel, 0..500, |i| i * i);
        assert_eq!(seq, par);
        let scratch = map_indexed_with(Exec::Parallel, 10..20, Vec::new, |buf: &mut Vec<u64>, i| {
            buf.push(i);
            i + 1
        });
        assert_eq!(scratch, (11..21).collect::<Vec<_>>());
    }

    #[test]
    fn pool_size_does_not_change_results() {
        let a = with_workers(Some(1), || map_indexed(Exec::Parallel, 0..100, |i| i ^ 0xAB));
        let b = with_workers(Some(3), || map_indexed(Exec::Parallel, 0..100, |i| i ^ 0xAB));
        assert_eq!(a, b);
    }
}
