//! Newtonian potential and interaction integrals of radial densities (G = 1).
//!
//! Node `i` carries the shell mass `F_i = 4π w_i ρ_i`. The enclosed mass
//! `m_i = Σ_{j≤i} F_j` and the potential
//! `U_i = -m_i / r_i - Σ_{j>i} F_j / r_j` are the exact Newton-theorem sums for
//! these shells, so the double sum `Σ_ij F_i G_j / max(r_i, r_j)`, the field
//! energy of the piecewise-constant enclosed mass and `-Σ F_i U_i` agree to
//! rounding.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::radial::{RadialDensity, RadialGrid, CSV_SCHEMA_VERSION};

/// Potential, enclosed mass and field magnitude at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialProfile {
    grid: Arc<RadialGrid>,
    rho: Vec<f64>,
    u: Vec<f64>,
    m_enc: Vec<f64>,
    field: Vec<f64>,
}

impl PotentialProfile {
    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn m_enc(&self) -> &[f64] {
        &self.m_enc
    }

    /// `|∇U|(r_i) = m(r_i) / r_i²`.
    pub fn field(&self) -> &[f64] {
        &self.field
    }

    pub fn min_u(&self) -> f64 {
        self.u.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn total_mass(&self) -> f64 {
        *self.m_enc.last().expect("nonempty grid")
    }

    /// `-(1/8π) ∫ |∇U|² dx`, integrating the field of the shell model
    /// (`|∇U| = m_i / r²` between nodes `i` and `i+1`, `M / r²` outside).
    pub fn field_energy(&self) -> f64 {
        let r = self.grid.nodes();
        let n = r.len();
        let mut acc = 0.0;
        for i in 0..n {
            let r4 = r[i].powi(4);
            let g2 = self.field[i] * self.field[i] * r4;
            let span = if i + 1 < n {
                (r[i + 1] - r[i]) / (r[i] * r[i + 1])
            } else {
                1.0 / r[i]
            };
            acc += 4.0 * PI * g2 * span;
        }
        -acc / (8.0 * PI)
    }

    /// Writes `r,rho,U,m_enc` CSV preceded by a schema comment line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# schema_version={CSV_SCHEMA_VERSION}")?;
        writeln!(out, "r,rho,U,m_enc")?;
        for i in 0..self.grid.len() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                self.grid.nodes()[i],
                self.rho[i],
                self.u[i],
                self.m_enc[i]
            )?;
        }
        Ok(())
    }
}

/// `F_i = 4π w_i ρ_i`; values may be signed.
pub(crate) fn shell_masses(grid: &RadialGrid, values: &[f64]) -> Vec<f64> {
    grid.weights()
        .iter()
        .zip(values)
        .map(|(w, v)| 4.0 * PI * w * v)
        .collect()
}

pub(crate) fn enclosed_mass(grid: &RadialGrid, values: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    shell_masses(grid, values)
        .into_iter()
        .map(|f| {
            acc += f;
            acc
        })
        .collect()
}

/// Potential and enclosed mass for (possibly signed) node values.
pub(crate) fn potential_values(grid: &RadialGrid, values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let r = grid.nodes();
    let n = r.len();
    let shells = shell_masses(grid, values);
    let mut m = vec![0.0; n];
    let mut acc = 0.0;
    for i in 0..n {
        acc += shells[i];
        m[i] = acc;
    }
    let mut u = vec![0.0; n];
    let mut outer = 0.0;
    for i in (0..n).rev() {
        u[i] = -m[i] / r[i] - outer;
        outer += shells[i] / r[i];
    }
    (u, m)
}

/// `∫_0^∞ m̃(r)² / r² dr` for the piecewise-constant enclosed mass, including
/// the exterior `m_N² / r_N`.
pub(crate) fn mass_square_integral(grid: &RadialGrid, m: &[f64]) -> f64 {
    let r = grid.nodes();
    let n = r.len();
    let mut acc = 0.0;
    for i in 0..n - 1 {
        acc += m[i] * m[i] * (r[i + 1] - r[i]) / (r[i] * r[i + 1]);
    }
    acc + m[n - 1] * m[n - 1] / r[n - 1]
}

/// `E_pot` of (possibly signed) node values: `-(1/2) ∫ m² / r² dr`.
pub(crate) fn epot_values(grid: &RadialGrid, values: &[f64]) -> f64 {
    let m = enclosed_mass(grid, values);
    -0.5 * mass_square_integral(grid, &m)
}

/// Solves `ΔU = 4πρ` with `U → 0` at infinity.
pub fn solve_potential(rho: &RadialDensity) -> PotentialProfile {
    let grid = rho.grid().clone();
    let (u, m_enc) = potential_values(&grid, rho.values());
    let field = m_enc.iter().zip(grid.nodes()).map(|(m, r)| m / (r * r)).collect();
    PotentialProfile {
        grid,
        rho: rho.values().to_vec(),
        u,
        m_enc,
        field,
    }
}

/// `E_pot(ρ) = -(1/2) ∫_0^∞ m(r)² / r² dr ≤ 0`.
pub fn epot(rho: &RadialDensity) -> f64 {
    epot_values(rho.grid(), rho.values())
}

/// `∬ ρ1(x) ρ2(y) / |x - y| dx dy`, using the angular average
/// `⟨1/|x-y|⟩ = 1 / max(|x|, |y|)`.
pub fn epot_pair(rho1: &RadialDensity, rho2: &RadialDensity) -> Result<f64> {
    if !rho1.same_grid(rho2) {
        return invalid("epot_pair needs densities on the same grid");
    }
    let grid = rho1.grid();
    let (u2, _) = potential_values(grid, rho2.values());
    let shells = shell_masses(grid, rho1.values());
    Ok(-shells.iter().zip(&u2).map(|(f, u)| f * u).sum::<f64>())
}

/// Angular average of `min(1/|x-y|, c)` for `|x| = r`, `|y| = s`.
///
/// With `d² = r² + s² - 2rs·cosθ` the average is
/// `(1/2rs) ∫_{|r-s|}^{r+s} min(1/d, c) d dd`, done in closed form.
pub fn cutoff_kernel(r: f64, s: f64, c: f64) -> f64 {
    let lo = (r - s).abs();
    let hi = r + s;
    let d_star = 1.0 / c;
    let integral = if d_star <= lo {
        2.0 * r.min(s)
    } else if d_star >= hi {
        // every distance is below 1/c
        return c;
    } else {
        hi - 0.5 * c * lo * lo - 0.5 * d_star
    };
    integral / (2.0 * r * s)
}

/// `∬ ρ(x) ρ(y) min(1/|x-y|, c) dx dy`.
pub fn epot_cutoff(rho: &RadialDensity, cutoff: f64) -> Result<f64> {
    if !(cutoff > 0.0) {
        return invalid(format!("cutoff must be positive, got {cutoff}"));
    }
    let grid = rho.grid();
    let r = grid.nodes();
    let shells = shell_masses(grid, rho.values());
    let support: Vec<usize> = (0..r.len()).filter(|&i| shells[i] != 0.0).collect();
    let mut acc = 0.0;
    for (a, &i) in support.iter().enumerate() {
        let mut row = 0.5 * shells[i] * cutoff_kernel(r[i], r[i], cutoff);
        for &j in &support[a + 1..] {
            row += shells[j] * cutoff_kernel(r[i], r[j], cutoff);
        }
        acc += 2.0 * shells[i] * row;
    }
    Ok(acc)
}
