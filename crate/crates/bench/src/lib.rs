//! Seeded inputs shared by the benchmarks.

use qsot_core::random::{random_channel, random_state, rng};
use qsot_core::{AlgebraShape, DensityMatrix, LinearMap};

/// A random channel on `M_n` and a random full-rank prior.
pub fn channel_and_prior(n: usize, seed: u64) -> (LinearMap, DensityMatrix) {
    let mut r = rng(seed);
    let shape = AlgebraShape::matrix(n);
    (random_channel(&mut r, &shape, &shape), random_state(&mut r, &shape))
}
