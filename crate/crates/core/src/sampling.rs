//! Random test densities for property sweeps.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;

use crate::error::Result;
use crate::radial::{RadialDensity, RadialGrid};
use crate::rearrange::CartesianDensity;

/// A sum of one to three Gaussian shells with random centers, widths and
/// amplitudes, scaled to `mass`.
pub fn random_radial_density<R: Rng>(grid: Arc<RadialGrid>, mass: f64, rng: &mut R) -> Result<RadialDensity> {
    let r_max = grid.r_max();
    let k = rng.gen_range(1..=3);
    let bumps: Vec<(f64, f64, f64)> = (0..k)
        .map(|_| {
            (
                rng.gen_range(0.0..0.5 * r_max),
                rng.gen_range(0.03..0.15) * r_max,
                rng.gen_range(0.2..1.0),
            )
        })
        .collect();
    let rho = RadialDensity::from_fn(grid, |r| {
        bumps.iter().map(|(c, w, a)| a * (-((r - c) / w).powi(2)).exp()).sum()
    })?;
    let m = rho.mass();
    rho.scale_values(mass / m)
}

/// Independent uniform cell values on `[0, 1)`, about a third of them
/// zeroed so that rearrangement has real work to do.
pub fn random_cartesian<R: Rng>(n: usize, cell: f64, rng: &mut R) -> Result<CartesianDensity> {
    let values = (0..n * n * n)
        .map(|_| {
            if rng.gen_bool(1.0 / 3.0) {
                0.0
            } else {
                rng.gen_range(0.0..1.0)
            }
        })
        .collect();
    CartesianDensity::new([n, n, n], cell, values)
}

/// Uniform ball of density `3M / (4π R³)` sampled at cell centers.
pub fn ball_cartesian(n: usize, cell: f64, mass: f64, radius: f64) -> Result<CartesianDensity> {
    let v = 3.0 * mass / (4.0 * PI * radius.powi(3));
    CartesianDensity::from_fn([n, n, n], cell, |x| {
        if (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt() <= radius {
            v
        } else {
            0.0
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{make_grid, Spacing};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_densities_are_reproducible() {
        let g = make_grid(10.0, 200, Spacing::Uniform).unwrap();
        let a = random_radial_density(g.clone(), 2.0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = random_radial_density(g, 2.0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, b);
        assert!((a.mass() - 2.0).abs() < 1e-12);
        let c = random_cartesian(4, 1.0, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(c.len(), 64);
    }
}
