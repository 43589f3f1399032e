//! Shared inputs for the benchmarks.

use std::sync::Arc;

use vpmin::{make_grid, ModelParams, RadialDensity, RadialGrid, Spacing};

/// Gaussian of unit mass on a uniform grid of `n` nodes over `[0, 8]`.
pub fn gaussian(n: usize) -> RadialDensity {
    let grid: Arc<RadialGrid> = make_grid(8.0, n, Spacing::Uniform).expect("valid grid");
    let rho = RadialDensity::from_fn(grid, |r| (-r * r).exp()).expect("finite values");
    let m = rho.mass();
    rho.scale_values(1.0 / m).expect("positive mass")
}

pub fn unit_params(mu: f64) -> ModelParams {
    ModelParams::new(mu, 1.0, 1.0, 1.0).expect("valid parameters")
}
