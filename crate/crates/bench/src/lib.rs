//! Shared inputs for the benchmarks.

use rand::Rng;

use lsconv_core::processes::{counting_step_function, sample_prw_points, DistributionSpec, WalkSpec};
use lsconv_core::rng::Substreams;
use lsconv_core::{GridFunction, StepFunction};

pub const SEED: u64 = 20_240_601;

pub fn poisson_walk() -> WalkSpec {
    WalkSpec::standard(DistributionSpec::Exponential { rate: 1.0 })
}

/// `n` atoms with uniform positions on `[0, n)` and unit weights.
pub fn random_step(n: usize, stream: u64) -> StepFunction {
    let mut rng = Substreams::new(SEED).replica(stream).stream(0, 0);
    StepFunction::from_atoms((0..n).map(|_| (rng.random::<f64>() * n as f64, 1.0))).unwrap()
}

/// Counting function of one Poisson walk on `[0, horizon]`.
pub fn poisson_counts(horizon: f64, replica: u64) -> StepFunction {
    let mut rng = Substreams::new(SEED).replica(replica).stream(1, 0);
    counting_step_function(&sample_prw_points(&poisson_walk(), horizon, &mut rng, usize::MAX).unwrap()).unwrap()
}

/// `f(t) = sin(t) + 2` and the monotone `g(t) = t^{3/2}` on `len` points.
pub fn grid_pair(len: usize) -> (GridFunction, GridFunction) {
    let dt = 1.0 / len as f64;
    let f = GridFunction::from_fn(dt, len - 1, |t| t.sin() + 2.0).unwrap();
    let g = GridFunction::monotone(dt, (0..len).map(|i| (i as f64 * dt).powf(1.5)).collect()).unwrap();
    (f, g)
}
