//! Convergence diagnostics for sequences of radial densities: potential
//! energy of differences, tail mass, `L^p` and field distances.
//!
//! Differences of densities are signed; they are handled here only.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::gravity::{enclosed_mass, epot_values, mass_square_integral};
use crate::params::{check_mu, psi_exponent};
use crate::radial::{RadialDensity, CSV_SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SequenceReport {
    pub index: usize,
    pub epot_diff: f64,
    pub tail_mass: f64,
    pub lp_dist: f64,
    pub field_dist: f64,
}

fn check_grids(a: &RadialDensity, b: &RadialDensity) -> Result<()> {
    if !a.same_grid(b) {
        return invalid("densities live on different grids");
    }
    Ok(())
}

fn difference(a: &RadialDensity, b: &RadialDensity) -> Vec<f64> {
    a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect()
}

/// `‖∇U_a - ∇U_b‖_{L²} = (4π ∫ (m_a - m_b)² / r² dr)^{1/2}`.
pub fn field_distance(a: &RadialDensity, b: &RadialDensity) -> Result<f64> {
    check_grids(a, b)?;
    let grid = a.grid();
    let ma = enclosed_mass(grid, a.values());
    let mb = enclosed_mass(grid, b.values());
    let dm: Vec<f64> = ma.iter().zip(&mb).map(|(x, y)| x - y).collect();
    Ok((4.0 * PI * mass_square_integral(grid, &dm)).sqrt())
}

/// `E_pot(a - b)` for the signed difference.
pub fn epot_difference(a: &RadialDensity, b: &RadialDensity) -> Result<f64> {
    check_grids(a, b)?;
    Ok(epot_values(a.grid(), &difference(a, b)))
}

/// `‖a - b‖_{L^p}`.
pub fn lp_distance(a: &RadialDensity, b: &RadialDensity, p: f64) -> Result<f64> {
    check_grids(a, b)?;
    if !(p >= 1.0) {
        return invalid(format!("L^p distance needs p ≥ 1, got {p}"));
    }
    let pw: Vec<f64> = difference(a, b).iter().map(|d| d.abs().powf(p)).collect();
    Ok((4.0 * PI * a.grid().integrate_r2(&pw)).powf(1.0 / p))
}

/// One report per element of `seq` (indices from 1), distances taken in
/// `L^{(2mu+5)/(2mu+3)}` and tail masses outside `r`.
pub fn sequence_report(seq: &[RadialDensity], limit: &RadialDensity, r: f64, mu: f64) -> Result<Vec<SequenceReport>> {
    check_mu(mu)?;
    let p = psi_exponent(mu);
    seq.iter()
        .enumerate()
        .map(|(i, rho)| {
            Ok(SequenceReport {
                index: i + 1,
                epot_diff: epot_difference(rho, limit)?,
                tail_mass: rho.tail_mass(r),
                lp_dist: lp_distance(rho, limit, p)?,
                field_dist: field_distance(rho, limit)?,
            })
        })
        .collect()
}

pub fn write_sequence_csv<W: Write>(reports: &[SequenceReport], mut out: W) -> Result<()> {
    writeln!(out, "# schema_version={CSV_SCHEMA_VERSION}")?;
    writeln!(out, "n,epot_diff,tail_mass,lp_dist,field_dist")?;
    for s in reports {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e}",
            s.index, s.epot_diff, s.tail_mass, s.lp_dist, s.field_dist
        )?;
    }
    Ok(())
}

/// `(ρ0 + bump/n) · M / (M + m_bump/n)`: converges to `ρ0` like `1/n`.
pub fn bump_sequence(rho0: &RadialDensity, bump: &RadialDensity, ns: &[usize]) -> Result<Vec<RadialDensity>> {
    check_grids(rho0, bump)?;
    let (m, mb) = (rho0.mass(), bump.mass());
    ns.iter()
        .map(|&n| {
            let t = 1.0 / n as f64;
            let s = m / (m + t * mb);
            let v = rho0
                .values()
                .iter()
                .zip(bump.values())
                .map(|(a, b)| (a + t * b) * s)
                .collect();
            RadialDensity::new(rho0.grid().clone(), v)
        })
        .collect()
}

/// `(1 - 1/√n) ρ0 + (1/√n) shell_n`, where `shell_n` has the mass of `ρ0`
/// spread uniformly over `[n r, (n + 1) r]`: the mass `M/√n` escapes to
/// infinity.
pub fn escaping_tail_sequence(rho0: &RadialDensity, r: f64, ns: &[usize]) -> Result<Vec<RadialDensity>> {
    let m = rho0.mass();
    ns.iter()
        .map(|&n| {
            let (lo, hi) = (n as f64 * r, (n as f64 + 1.0) * r);
            if hi > rho0.grid().r_max() {
                return invalid(format!("grid too small for shell at radius {hi}"));
            }
            let shell = RadialDensity::from_fn(rho0.grid().clone(), |x| if x >= lo && x < hi { 1.0 } else { 0.0 })?;
            let ms = shell.mass();
            if ms == 0.0 {
                return invalid("shell not resolved by the grid");
            }
            let t = 1.0 / (n as f64).sqrt();
            let v = rho0
                .values()
                .iter()
                .zip(shell.values())
                .map(|(a, b)| (1.0 - t) * a + t * b * m / ms)
                .collect();
            RadialDensity::new(rho0.grid().clone(), v)
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
