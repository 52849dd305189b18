//! Data-parallel helpers. With the `parallel` feature (default) these run on
//! the rayon pool; without it they fall back to plain iterators. Both paths
//! produce identical results: maps keep input order and the pointwise updates
//! touch each element once.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Below this many elements the pointwise kernels stay on the calling thread.
#[cfg(feature = "parallel")]
const MIN_PARALLEL_LEN: usize = 8192;

/// Ordered map over independent work items (one per truncation order, say).
pub fn map<I, O, F>(items: &[I], f: F) -> Vec<O>
where
    I: Sync,
    O: Send,
    F: Fn(&I) -> O + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Always-sequential counterpart of [`map`].
pub fn map_sequential<I, O, F>(items: &[I], f: F) -> Vec<O>
where
    F: Fn(&I) -> O,
{
    items.iter().map(f).collect()
}

/// Runs two closures, concurrently when the `parallel` feature is on.
pub fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    #[cfg(feature = "parallel")]
    {
        rayon::join(a, b)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (a(), b())
    }
}

/// `dst[i] *= factor[i]`.
pub fn mul_assign<T>(dst: &mut [T], factor: &[T])
where
    T: Copy + Send + Sync + std::ops::MulAssign,
{
    debug_assert_eq!(dst.len(), factor.len());
    #[cfg(feature = "parallel")]
    if dst.len() >= MIN_PARALLEL_LEN {
        dst.par_iter_mut()
            .with_min_len(MIN_PARALLEL_LEN / 4)
            .zip(factor.par_iter())
            .for_each(|(d, f)| *d *= *f);
        return;
    }
    dst.iter_mut().zip(factor).for_each(|(d, f)| *d *= *f);
}
