//! Data-parallel execution with a sequential fallback.
//!
//! With the `parallel` feature (default) jobs run on the rayon pool; without
//! it they run in a plain loop. Results are collected in index order either
//! way, and Monte-Carlo reductions fold fixed-size blocks sequentially, so a
//! given seed produces bit-identical output regardless of feature or thread
//! count.

/// Default number of samples per Monte-Carlo block.
pub const MC_BLOCK: usize = 8192;

/// Caps the global worker pool at `n` threads. Must be called before any
/// parallel work; later calls fail harmlessly. No-op without the `parallel`
/// feature.
#[cfg(feature = "parallel")]
pub fn set_threads(n: usize) -> std::result::Result<(), String> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

/// Caps the global worker pool at `n` threads. Must be called before any
/// parallel work; later calls fail harmlessly. No-op without the `parallel`
/// feature.
#[cfg(not(feature = "parallel"))]
pub fn set_threads(_n: usize) -> std::result::Result<(), String> {
    Ok(())
}

/// Runs `f(0), .., f(n-1)` and returns the results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Runs `f(0), .., f(n-1)` and returns the results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Splits `0..n` into blocks of `block` items, maps each block, then folds
/// the block results in block order.
pub fn map_reduce_blocks<A, M, F>(n: usize, block: usize, map: M, mut fold: F) -> Option<A>
where
    A: Send,
    M: Fn(std::ops::Range<usize>) -> A + Sync,
    F: FnMut(A, A) -> A,
{
    if n == 0 {
        return None;
    }
    let blocks = n.div_ceil(block);
    let parts = map_indexed(blocks, |b| {
        let lo = b * block;
        let hi = ((b + 1) * block).min(n);
        map(lo..hi)
    });
    parts.into_iter().reduce(|a, b| fold(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_reduction_matches_sequential_sum() {
        let total = map_reduce_blocks(
            10_000,
            128,
            |r| r.map(|i| i as u64).sum::<u64>(),
            |a, b| a + b,
        )
        .unwrap();
        assert_eq!(total, 10_000u64 * 9_999 / 2);
    }

    #[test]
    fn empty_range_reduces_to_none() {
        assert!(map_reduce_blocks(0, 16, |_| 0u64, |a, b| a + b).is_none());
    }
}
