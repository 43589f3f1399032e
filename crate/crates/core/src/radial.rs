//! Radial grids and spherically symmetric densities.
//!
//! A density is stored by its values at the grid nodes. Integrals of the form
//! `∫ g(r) r² dr` use per-node volume weights: for grids built by
//! [`RadialGrid::new`] these are the exact moments `∫ r² φ_i(r) dr` of the
//! piecewise-linear hat functions `φ_i`, with the first hat extended flat down
//! to the origin. The rule is second order and integrates `r²` exactly.

use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, VpError};
use crate::params::{check_mu, psi_exponent};

/// Default ratio `r_min / r_max` for logarithmic grids.
pub const LOG_GRID_RMIN_RATIO: f64 = 1e-6;

/// Relative mass tolerance for membership in the constraint set.
pub const MASS_TOLERANCE: f64 = 1e-6;

pub const CSV_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Uniform,
    Log,
    /// Nodes and weights supplied by the caller (e.g. lattice shell volumes).
    Custom,
}

impl std::str::FromStr for Spacing {
    type Err = VpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Spacing::Uniform),
            "log" => Ok(Spacing::Log),
            other => invalid(format!("unknown spacing {other:?} (expected uniform|log)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    spacing: Spacing,
}

impl RadialGrid {
    /// Builds a grid on `(0, r_max]` with `n` nodes; the last node is `r_max`.
    ///
    /// Uniform nodes sit at `(i + 1/2) h` with `h = r_max / (n - 1/2)`; log
    /// nodes run geometrically from `r_max * 1e-6` to `r_max`.
    pub fn new(r_max: f64, n: usize, spacing: Spacing) -> Result<Self> {
        match spacing {
            Spacing::Log => Self::log(r_max * LOG_GRID_RMIN_RATIO, r_max, n),
            Spacing::Uniform => {
                check_size(r_max, n)?;
                let h = r_max / (n as f64 - 0.5);
                let mut nodes: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
                nodes[n - 1] = r_max;
                Ok(Self::with_hat_weights(nodes, Spacing::Uniform))
            }
            Spacing::Custom => invalid("custom grids are built with RadialGrid::from_parts"),
        }
    }

    /// Geometric grid from `r_min` to `r_max`.
    pub fn log(r_min: f64, r_max: f64, n: usize) -> Result<Self> {
        check_size(r_max, n)?;
        if !(r_min > 0.0 && r_min < r_max) {
            return invalid(format!("log grid needs 0 < r_min < r_max, got {r_min}"));
        }
        let ratio = (r_max / r_min).ln() / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| r_min * (ratio * i as f64).exp()).collect();
        nodes[n - 1] = r_max;
        Ok(Self::with_hat_weights(nodes, Spacing::Log))
    }

    /// Grid with caller-supplied volume weights (`∫ g r² dr ≈ Σ w_i g_i`).
    pub fn from_parts(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return invalid("nodes and weights must be nonempty and of equal length");
        }
        check_nodes(&nodes)?;
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return invalid("weights must be finite and nonnegative");
        }
        Ok(Self {
            nodes,
            weights,
            spacing: Spacing::Custom,
        })
    }

    fn with_hat_weights(nodes: Vec<f64>, spacing: Spacing) -> Self {
        let n = nodes.len();
        let mut weights = vec![0.0; n];
        // flat extension of the first hat on [0, r_0]
        weights[0] = nodes[0].powi(3) / 3.0;
        for i in 0..n - 1 {
            let a = nodes[i];
            let l = nodes[i + 1] - a;
            // ∫_a^{a+l} r² (a+l-r)/l dr and ∫_a^{a+l} r² (r-a)/l dr
            weights[i] += a * a * l / 2.0 + a * l * l / 3.0 + l * l * l / 12.0;
            weights[i + 1] += a * a * l / 2.0 + 2.0 * a * l * l / 3.0 + l * l * l / 4.0;
        }
        Self {
            nodes,
            weights,
            spacing,
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Volume weights: `∫_0^{r_max} g(r) r² dr ≈ Σ weights[i] g(nodes[i])`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().expect("grid is nonempty")
    }

    /// `∫ g r² dr` for node samples `g`.
    pub fn integrate_r2(&self, g: &[f64]) -> f64 {
        debug_assert_eq!(g.len(), self.len());
        self.weights.iter().zip(g).map(|(w, v)| w * v).sum()
    }

    /// `∫ g r² dr` for a function evaluated at the nodes.
    pub fn integrate_r2_fn(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(r, w)| w * g(*r)).sum()
    }

    /// Relative error of the rule on `∫_0^{r_max} r² dr = r_max³/3`.
    pub fn calibration_error(&self) -> f64 {
        let exact = self.r_max().powi(3) / 3.0;
        (self.weights.iter().sum::<f64>() - exact).abs() / exact
    }

    /// The grid under `r -> r / b`; volume weights pick up `b^{-3}`.
    pub fn scaled(&self, b: f64) -> Self {
        let b3 = b * b * b;
        Self {
            nodes: self.nodes.iter().map(|r| r / b).collect(),
            weights: self.weights.iter().map(|w| w / b3).collect(),
            spacing: self.spacing,
        }
    }

    /// Index of the last node with `r <= r_split`, if any.
    pub fn last_inside(&self, r_split: f64) -> Option<usize> {
        let k = self.nodes.partition_point(|r| *r <= r_split);
        k.checked_sub(1)
    }

    pub fn same_nodes(&self, other: &RadialGrid) -> bool {
        std::ptr::eq(self, other) || self.nodes == other.nodes
    }
}

fn check_size(r_max: f64, n: usize) -> Result<()> {
    if !(r_max > 0.0 && r_max.is_finite()) {
        return invalid(format!("r_max = {r_max} must be positive and finite"));
    }
    if n < 16 {
        return invalid(format!("grid needs at least 16 nodes, got {n}"));
    }
    Ok(())
}

fn check_nodes(nodes: &[f64]) -> Result<()> {
    if nodes.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return invalid("grid nodes must be positive and finite");
    }
    if nodes.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("grid nodes must be strictly increasing");
    }
    Ok(())
}

/// Shorthand for [`RadialGrid::new`].
pub fn make_grid(r_max: f64, n: usize, spacing: Spacing) -> Result<Arc<RadialGrid>> {
    RadialGrid::new(r_max, n, spacing).map(Arc::new)
}

/// A nonnegative spherically symmetric density sampled on a radial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialDensity {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl RadialDensity {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return invalid(format!("{} values for a grid of {} nodes", values.len(), grid.len()));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return invalid(format!("density values must be finite and >= 0, found {v}"));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|r| f(*r)).collect();
        Self::new(grid, values)
    }

    pub fn zero(grid: Arc<RadialGrid>) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    /// Uniform ball of total mass `mass` and radius `radius`, sampled pointwise.
    pub fn uniform_ball(grid: Arc<RadialGrid>, mass: f64, radius: f64) -> Result<Self> {
        let rho_c = 3.0 * mass / (4.0 * PI * radius.powi(3));
        Self::from_fn(grid, |r| if r <= radius { rho_c } else { 0.0 })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    /// `4π ∫ ρ r² dr`.
    pub fn mass(&self) -> f64 {
        4.0 * PI * self.grid.integrate_r2(&self.values)
    }

    /// `(4π ∫ ρ^p r² dr)^{1/p}`.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0 && p.is_finite()) {
            return invalid(format!("L^p norm needs p >= 1, got {p}"));
        }
        Ok(self.power_integral(p).powf(1.0 / p))
    }

    /// `Ψ(ρ) = ∫ ρ^{(2mu+5)/(2mu+3)} dx`.
    pub fn psi(&self, mu: f64) -> Result<f64> {
        check_mu(mu)?;
        Ok(self.power_integral(psi_exponent(mu)))
    }

    /// `4π ∫ ρ^p r² dr`.
    pub(crate) fn power_integral(&self, p: f64) -> f64 {
        4.0 * PI
            * self
                .grid
                .weights()
                .iter()
                .zip(&self.values)
                .map(|(w, v)| if *v > 0.0 { w * v.powf(p) } else { 0.0 })
                .sum::<f64>()
    }

    /// `ρ̄(r) = a ρ(b r)`, realized on the grid with nodes divided by `b`.
    pub fn rescale(&self, a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return invalid(format!("rescale needs a, b > 0, got a = {a}, b = {b}"));
        }
        Ok(Self {
            grid: Arc::new(self.grid.scaled(b)),
            values: self.values.iter().map(|v| a * v).collect(),
        })
    }

    /// Multiplies the values by `a` on the same grid.
    pub fn scale_values(&self, a: f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|v| a * v).collect())
    }

    /// `(1_{B_R} ρ, ρ - 1_{B_R} ρ)`; node `r_i` goes inside when `r_i <= r_split`.
    pub fn split_at(&self, r_split: f64) -> (Self, Self) {
        let k = self.grid.last_inside(r_split).map_or(0, |i| i + 1);
        let mut inner = self.values.clone();
        let mut outer = self.values.clone();
        inner[k..].iter_mut().for_each(|v| *v = 0.0);
        outer[..k].iter_mut().for_each(|v| *v = 0.0);
        (
            Self {
                grid: self.grid.clone(),
                values: inner,
            },
            Self {
                grid: self.grid.clone(),
                values: outer,
            },
        )
    }

    /// Mass outside the ball of radius `r_split`.
    pub fn tail_mass(&self, r_split: f64) -> f64 {
        let k = self.grid.last_inside(r_split).map_or(0, |i| i + 1);
        4.0 * PI
            * self.grid.weights()[k..]
                .iter()
                .zip(&self.values[k..])
                .map(|(w, v)| w * v)
                .sum::<f64>()
    }

    /// Checks membership in `F_M^mu`: finite Ψ and mass `M` within
    /// [`MASS_TOLERANCE`].
    pub fn check_membership(&self, mass: f64, mu: f64) -> Result<()> {
        let psi = self.psi(mu)?;
        if !psi.is_finite() {
            return Err(VpError::ConstraintViolation("Ψ(ρ) is not finite".into()));
        }
        let m = self.mass();
        if (m - mass).abs() > MASS_TOLERANCE * mass.abs() {
            return Err(VpError::ConstraintViolation(format!(
                "mass {m} differs from M = {mass}"
            )));
        }
        Ok(())
    }

    pub fn same_grid(&self, other: &RadialDensity) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || self.grid.same_nodes(&other.grid)
    }

    /// Writes `r,rho` CSV preceded by a schema comment line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# schema_version={CSV_SCHEMA_VERSION}")?;
        writeln!(out, "r,rho")?;
        for (r, v) in self.grid.nodes().iter().zip(&self.values) {
            writeln!(out, "{r:.16e},{v:.16e}")?;
        }
        Ok(())
    }

    /// Reads the first two columns of a CSV written by [`Self::write_csv`]
    /// (or the wider potential profile). Volume weights are rebuilt as hat
    /// moments of the stored nodes.
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for line in input.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with('r') {
                continue;
            }
            let mut cols = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.ok_or_else(|| VpError::InvalidArgument(format!("short csv row {line:?}")))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| VpError::InvalidArgument(format!("bad number in {line:?}: {e}")))
            };
            nodes.push(parse(cols.next())?);
            values.push(parse(cols.next())?);
        }
        if nodes.len() < 2 {
            return invalid("csv holds fewer than two rows");
        }
        check_nodes(&nodes)?;
        let grid = RadialGrid::with_hat_weights(nodes, Spacing::Custom);
        Self::new(Arc::new(grid), values)
    }
}
