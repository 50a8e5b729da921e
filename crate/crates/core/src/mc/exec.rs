use std::ops::Range;

/// Paths per reduction block; fixed so summation order never depends on workers.
pub const BLOCK_SIZE: u64 = 1024;

/// Evaluates `f` on consecutive index blocks of `0..n` and returns the results
/// in block order. With the `parallel` feature and `workers > 1` the blocks run
/// on a rayon pool of that size; otherwise sequentially.
pub fn run_blocks<A, F>(n: u64, workers: usize, f: F) -> Vec<A>
where
    A: Send,
    F: Fn(Range<u64>) -> A + Sync + Send,
{
    let n_blocks = n.div_ceil(BLOCK_SIZE);
    let block = |b: u64| f(b * BLOCK_SIZE..((b + 1) * BLOCK_SIZE).min(n));
    #[cfg(feature = "parallel")]
    if workers > 1 {
        use rayon::prelude::*;
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            return pool.install(|| (0..n_blocks).into_par_iter().map(block).collect());
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = workers;
    (0..n_blocks).map(block).collect()
}
