//! Execution policy for the data-parallel loops.
//!
//! Every parallel path reduces with integer sums or ordered collects, so the
//! sequential and parallel variants produce bit-identical output.

use std::ops::Range;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Runs on the rayon pool. Without the `parallel` feature this is the
    /// same as [`Execution::Sequential`].
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Ordered map over a slice.
pub(crate) fn map_slice<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Sum of `f(chunk)` over `range` split into fixed-size chunks. `T` should
/// sum associatively (integer counts), so the result ignores the pool size.
pub(crate) fn sum_chunks<T, F>(exec: Execution, range: Range<u64>, chunk: u64, f: F) -> T
where
    T: Send + std::iter::Sum<T>,
    F: Fn(Range<u64>) -> T + Sync + Send,
{
    let chunk = chunk.max(1);
    let count = (range.end.saturating_sub(range.start)).div_ceil(chunk);
    let piece = |k: u64| {
        let lo = range.start + k * chunk;
        lo..(lo + chunk).min(range.end)
    };
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..count).into_par_iter().map(|k| f(piece(k))).sum();
    }
    let _ = exec;
    (0..count).map(|k| f(piece(k))).sum()
}
