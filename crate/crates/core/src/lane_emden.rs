//! Lane–Emden polytropes: `θ'' + (2/ξ) θ' + θ_+^n = 0`, `θ(0) = 1`,
//! `θ'(0) = 0`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::radial::{RadialDensity, RadialGrid};

#[derive(Debug, Clone, Copy)]
pub struct LaneEmdenOptions {
    pub step: f64,
    /// Where the series start hands over to the integrator.
    pub xi_start: f64,
    /// Integration stops here if no zero was found.
    pub xi_max: f64,
}

impl Default for LaneEmdenOptions {
    fn default() -> Self {
        Self {
            step: 1e-4,
            xi_start: 1e-3,
            xi_max: 50.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LaneEmdenSolution {
    pub index_n: f64,
    pub xi: Vec<f64>,
    pub theta: Vec<f64>,
    pub dtheta: Vec<f64>,
    /// First zero, `None` when `θ` stays positive (n ≥ 5).
    pub xi1: Option<f64>,
    /// `-ξ1² θ'(ξ1)`.
    pub mtheta1: Option<f64>,
}

fn rhs(n: f64, xi: f64, y: [f64; 2]) -> [f64; 2] {
    let src = if y[0] > 0.0 { y[0].powf(n) } else { 0.0 };
    [y[1], -src - 2.0 * y[1] / xi]
}

fn rk4(n: f64, xi: f64, y: [f64; 2], h: f64) -> [f64; 2] {
    let k1 = rhs(n, xi, y);
    let k2 = rhs(n, xi + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
    let k3 = rhs(n, xi + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
    let k4 = rhs(n, xi + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

fn series(n: f64, xi: f64) -> [f64; 2] {
    let x2 = xi * xi;
    let c6 = n * (8.0 * n - 5.0) / 15120.0;
    [
        1.0 - x2 / 6.0 + n * x2 * x2 / 120.0 - c6 * x2 * x2 * x2,
        -xi / 3.0 + n * x2 * xi / 30.0 - 6.0 * c6 * x2 * x2 * xi,
    ]
}

pub fn lane_emden(n: f64, opts: LaneEmdenOptions) -> Result<LaneEmdenSolution> {
    if !(n >= 0.0 && n.is_finite()) {
        return invalid(format!("polytropic index must be nonnegative, got {n}"));
    }
    if !(opts.step > 0.0 && opts.xi_start > 0.0 && opts.xi_max > opts.xi_start) {
        return invalid("invalid Lane-Emden options");
    }
    let h = opts.step;
    let mut xi = vec![0.0];
    let mut theta = vec![1.0];
    let mut dtheta = vec![0.0];
    let mut x = opts.xi_start;
    let mut y = series(n, x);
    xi.push(x);
    theta.push(y[0]);
    dtheta.push(y[1]);
    let mut xi1 = None;
    while x < opts.xi_max {
        let next = rk4(n, x, y, h);
        if next[0] <= 0.0 {
            // bisect on the length of the last step
            let (mut lo, mut hi) = (0.0, h);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if rk4(n, x, y, mid)[0] > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let s = 0.5 * (lo + hi);
            let end = rk4(n, x, y, s);
            xi.push(x + s);
            theta.push(0.0);
            dtheta.push(end[1]);
            xi1 = Some(x + s);
            break;
        }
        x += h;
        y = next;
        xi.push(x);
        theta.push(y[0]);
        dtheta.push(y[1]);
    }
    let mtheta1 = xi1.map(|z| -z * z * dtheta[dtheta.len() - 1]);
    Ok(LaneEmdenSolution {
        index_n: n,
        xi,
        theta,
        dtheta,
        xi1,
        mtheta1,
    })
}

impl LaneEmdenSolution {
    pub fn unbounded(&self) -> bool {
        self.xi1.is_none()
    }

    /// `θ(ξ)` by cubic Hermite interpolation, zero beyond `ξ1`.
    pub fn theta_at(&self, x: f64) -> f64 {
        let last = *self.xi.last().expect("nonempty");
        if x <= 0.0 {
            return 1.0;
        }
        if x >= last {
            return if self.xi1.is_some() {
                0.0
            } else {
                self.theta[self.theta.len() - 1]
            };
        }
        let k = self.xi.partition_point(|&v| v <= x) - 1;
        let (x0, x1) = (self.xi[k], self.xi[k + 1]);
        let d = x1 - x0;
        let t = (x - x0) / d;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let v = h00 * self.theta[k] + h10 * d * self.dtheta[k] + h01 * self.theta[k + 1] + h11 * d * self.dtheta[k + 1];
        v.max(0.0)
    }
}

/// Density `ρ_c θ(r/a)^n` on `grid` with `ρ_c = M / (4π a³ (-ξ1² θ'(ξ1)))`,
/// renormalized so the discrete mass is exactly `mass`.
pub fn polytrope_from_lane_emden(
    sol: &LaneEmdenSolution,
    mass: f64,
    length_scale: f64,
    grid: Arc<RadialGrid>,
) -> Result<RadialDensity> {
    let Some(mtheta1) = sol.mtheta1 else {
        return invalid("polytrope needs a finite first zero");
    };
    if !(mass > 0.0 && length_scale > 0.0) {
        return invalid("mass and length scale must be positive");
    }
    let rho_c = mass / (4.0 * PI * length_scale.powi(3) * mtheta1);
    let n = sol.index_n;
    let rho = RadialDensity::from_fn(grid, |r| rho_c * sol.theta_at(r / length_scale).powf(n))?;
    let m = rho.mass();
    if m == 0.0 {
        return invalid("grid does not resolve the polytrope");
    }
    rho.scale_values(mass / m)
}

/// A radial profile matched against the polytrope of the same mass and
/// central density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolytropeComparison {
    /// Central density, extrapolated quadratically in `r` from the first
    /// two nodes.
    pub rho_c: f64,
    /// Length scale `a` with `M = 4π ρ_c a³ (-ξ1² θ'(ξ1))`.
    pub length_scale: f64,
    /// `r_support / (a ξ1)`.
    pub xi1_ratio: f64,
    /// `max |ρ - ρ_c θ(r/a)^n| / ρ_c` over `r < fraction · r_support`.
    pub max_rel_error: f64,
}

pub fn compare_with_polytrope(
    rho: &RadialDensity,
    r_support: f64,
    sol: &LaneEmdenSolution,
    fraction: f64,
) -> Result<PolytropeComparison> {
    compare_profile(rho.grid().nodes(), rho.values(), rho.mass(), r_support, sol, fraction)
}

/// [`compare_with_polytrope`] on bare node values, e.g. read back from a
/// profile file.
pub fn compare_profile(
    r: &[f64],
    v: &[f64],
    mass: f64,
    r_support: f64,
    sol: &LaneEmdenSolution,
    fraction: f64,
) -> Result<PolytropeComparison> {
    let (Some(xi1), Some(mtheta1)) = (sol.xi1, sol.mtheta1) else {
        return invalid("comparison needs a finite first zero");
    };
    if r.len() < 2 || r.len() != v.len() {
        return invalid("profile needs at least two nodes with matching values");
    }
    let (r0, r1) = (r[0] * r[0], r[1] * r[1]);
    let rho_c = (v[0] * r1 - v[1] * r0) / (r1 - r0);
    if !(rho_c > 0.0 && mass > 0.0) {
        return invalid("profile has no central density");
    }
    let a = (mass / (4.0 * PI * rho_c * mtheta1)).cbrt();
    let n = sol.index_n;
    let max_rel_error = r
        .iter()
        .zip(v)
        .filter(|(ri, _)| **ri < fraction * r_support)
        .map(|(ri, vi)| (vi - rho_c * sol.theta_at(ri / a).powf(n)).abs() / rho_c)
        .fold(0.0, f64::max);
    Ok(PolytropeComparison {
        rho_c,
        length_scale: a,
        xi1_ratio: r_support / (a * xi1),
        max_rel_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{make_grid, Spacing};

    #[test]
    fn closed_forms() {
        let s0 = lane_emden(0.0, LaneEmdenOptions::default()).unwrap();
        assert!((s0.xi1.unwrap() - 6f64.sqrt()).abs() < 1e-9);
        assert!((s0.theta_at(1.0) - (1.0 - 1.0 / 6.0)).abs() < 1e-12);
        let s1 = lane_emden(1.0, LaneEmdenOptions::default()).unwrap();
        assert!((s1.xi1.unwrap() - PI).abs() < 1e-9);
        for x in [0.5, 1.7, 3.0] {
            assert!((s1.theta_at(x) - x.sin() / x).abs() < 1e-10);
        }
        assert!((s1.mtheta1.unwrap() - PI).abs() < 1e-9);
    }

    #[test]
    fn tabulated_zeros() {
        let xi1 = |n| lane_emden(n, LaneEmdenOptions::default()).unwrap().xi1.unwrap();
        assert!((xi1(3.0) - 6.89685).abs() < 1e-5);
        assert!((xi1(2.0) - 4.35287).abs() < 1e-5);
        assert!((xi1(4.0) - 14.97155).abs() < 1e-4);
    }

    #[test]
    fn step_halving_is_stable() {
        let a = lane_emden(3.0, LaneEmdenOptions::default()).unwrap();
        let b = lane_emden(
            3.0,
            LaneEmdenOptions {
                step: 5e-5,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((a.xi1.unwrap() - b.xi1.unwrap()).abs() < 1e-6);
    }

    #[test]
    fn index_five_is_unbounded() {
        let s = lane_emden(5.0, LaneEmdenOptions::default()).unwrap();
        assert!(s.unbounded());
        let x = 10.0;
        assert!((s.theta_at(x) - (1.0 + x * x / 3.0).powf(-0.5)).abs() < 1e-8);
    }

    #[test]
    fn polytrope_mass_and_shape() {
        let s = lane_emden(1.0, LaneEmdenOptions::default()).unwrap();
        let g = make_grid(4.0, 4000, Spacing::Uniform).unwrap();
        let rho = polytrope_from_lane_emden(&s, 2.0, 1.0, g).unwrap();
        assert!((rho.mass() - 2.0).abs() < 1e-12);
        let rho_c = 2.0 / (4.0 * PI * PI);
        for (r, v) in rho.grid().nodes().iter().zip(rho.values()) {
            let want = if *r < PI { rho_c * r.sin() / r } else { 0.0 };
            assert!((v - want).abs() < 1e-5 * rho_c);
        }
        let s5 = lane_emden(5.0, LaneEmdenOptions::default()).unwrap();
        let g = make_grid(4.0, 100, Spacing::Uniform).unwrap();
        assert!(polytrope_from_lane_emden(&s5, 1.0, 1.0, g).is_err());
    }
}
