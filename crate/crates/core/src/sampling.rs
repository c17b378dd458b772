//! Seeded, thread-count-independent sampling.
//!
//! Samples are generated in fixed-size shards; shard `i` draws from its own
//! ChaCha8 stream `i` under the run seed, so results depend only on
//! `(seed, count)` and never on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Points per shard.
pub const SHARD_SIZE: usize = 1024;

/// The RNG for shard `shard` of a run seeded with `seed`.
pub fn shard_rng(seed: u64, shard: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard);
    rng
}

fn shard_ranges(count: usize) -> Vec<(u64, usize)> {
    (0..count.div_ceil(SHARD_SIZE))
        .map(|i| (i as u64, SHARD_SIZE.min(count - i * SHARD_SIZE)))
        .collect()
}

/// Evaluates `f(index, rng)` for `count` samples in parallel, returning the
/// results in sample order.
pub fn par_generate<T, F>(seed: u64, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> T + Sync,
{
    shard_ranges(count)
        .into_par_iter()
        .map(|(shard, len)| {
            let mut rng = shard_rng(seed, shard);
            let base = shard as usize * SHARD_SIZE;
            (0..len).map(|i| f(base + i, &mut rng)).collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// A standard Gaussian vector in `ℝⁿ`.
pub fn gaussian<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// A uniform point of the half-open box `[lo, hi)`.
pub fn uniform_in_box<R: Rng>(rng: &mut R, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    lo.iter().zip(hi).map(|(a, b)| a + (b - a) * rng.random::<f64>()).collect()
}

/// `count` standard Gaussian points in `ℝⁿ`.
pub fn gaussian_points(seed: u64, count: usize, n: usize) -> Vec<Vec<f64>> {
    par_generate(seed, count, |_, rng| gaussian(rng, n))
}

/// `count` uniform points of the box `[lo, hi)`.
pub fn uniform_points(seed: u64, count: usize, lo: &[f64], hi: &[f64]) -> Vec<Vec<f64>> {
    par_generate(seed, count, |_, rng| uniform_in_box(rng, lo, hi))
}

/// Maps `f` over Gaussian samples in parallel, preserving sample order.
pub fn map_gaussian<T, F>(seed: u64, count: usize, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&[f64]) -> T + Sync,
{
    par_generate(seed, count, |_, rng| {
        let p = gaussian(rng, n);
        f(&p)
    })
}

/// Sizes the global worker pool. Results never depend on the thread count;
/// a pool that is already initialised is left as is.
pub fn configure_threads(threads: usize) {
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
}
