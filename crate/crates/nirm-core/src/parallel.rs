//! Thin facade over rayon.
//!
//! Every data-parallel loop in this crate goes through these helpers, so
//! building with `--no-default-features` swaps in a sequential fallback with
//! identical results: outputs are collected in input order and reductions
//! use fixed chunk boundaries, never thread count.

#[cfg(feature = "parallel")]
pub fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..n).map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.iter().map(f).collect()
}

/// Sums per-chunk partial vectors in fixed chunk order, so the floating-point
/// reduction order is independent of the worker count.
pub fn sum_chunked<F>(len: usize, items: usize, chunk: usize, partial: F) -> Vec<f64>
where
    F: Fn(std::ops::Range<usize>) -> Vec<f64> + Sync + Send,
{
    if items == 0 {
        return vec![0.0; len];
    }
    let n_chunks = items.div_ceil(chunk);
    let partials = map_indexed(n_chunks, |c| {
        let lo = c * chunk;
        let hi = ((c + 1) * chunk).min(items);
        partial(lo..hi)
    });
    let mut total = vec![0.0; len];
    for p in partials {
        debug_assert_eq!(p.len(), len);
        for (t, x) in total.iter_mut().zip(p) {
            *t += x;
        }
    }
    total
}
