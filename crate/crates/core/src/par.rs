//! Order-preserving data-parallel maps.
//!
//! Every helper returns results in input order, so any reduction done afterwards
//! is sequential and bit-identical whether or not the `parallel` feature is on.
//! The `_seq` variants always run on the calling thread; benches use them as the
//! baseline.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Below this many items the parallel helpers just run sequentially.
pub const MIN_PAR_LEN: usize = 2048;

pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_range_seq(n, f)
    }
}

pub fn map_range_seq<R, F>(n: usize, f: F) -> Vec<R>
where
    F: Fn(usize) -> R,
{
    (0..n).map(f).collect()
}

pub fn map_slice<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_slice_seq(items, f)
    }
}

pub fn map_slice_seq<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Like [`map_slice`] but stays sequential for short inputs, where thread
/// hand-off costs more than the work.
pub fn map_slice_chunked<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if items.len() < MIN_PAR_LEN {
        map_slice_seq(items, f)
    } else {
        map_slice(items, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree_bitwise() {
        let f = |i: usize| ((i as f64) * 0.37).sin().exp();
        let a = map_range(10_000, f);
        let b = map_range_seq(10_000, f);
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        let xs: Vec<f64> = b.clone();
        let c = map_slice_chunked(&xs, |x| x * 2.0);
        let d = map_slice_seq(&xs, |x| x * 2.0);
        assert_eq!(c, d);
    }
}
