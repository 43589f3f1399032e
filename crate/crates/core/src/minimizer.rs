//! Minimizer of `E_J^mu` over `F_M^mu` by damped self-consistent-field
//! iteration.
//!
//! Each step solves for the potential `U_k` of `ρ_k`, forms
//! `ρ̂ = ((E0 - U_k) / C_k)_+^n` with `n = mu + 3/2`,
//! `C_k = K (2mu+5)/3 Ψ(ρ_k)^{2mu/3}` and `E0` fixed by the mass, and moves
//! `ρ_{k+1} = (1-θ) ρ_k + θ ρ̂`. The damping is halved whenever the energy
//! would increase.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, VpError};
use crate::gravity::{epot_values, potential_values, solve_potential, PotentialProfile};
use crate::io::{write_atomic, write_json};
use crate::params::{j_exponent, kinetic_power, polytropic_index, psi_exponent, ModelParams};
use crate::radial::{make_grid, RadialDensity, RadialGrid, Spacing, CSV_SCHEMA_VERSION};
use crate::reduced::{scaling_map, EnergyBreakdown};
use crate::roots::{brent, Tolerance};

pub const SUPPORT_THRESHOLD: f64 = 1e-8;
pub const MAX_GRID_DOUBLINGS: usize = 5;

#[derive(Debug, Clone, Default)]
pub enum InitialGuess {
    /// Uniform ball whose radius follows the scaling law from the problem
    /// with `M = J = K11 = 1`, where the support radius is of order 2.
    #[default]
    Scaled,
    UniformBall {
        radius: f64,
    },
    Gaussian {
        width: f64,
    },
    /// Resampled onto the solver grid by linear interpolation and
    /// renormalized to the target mass.
    Profile(RadialDensity),
}

#[derive(Debug, Clone)]
pub struct ScfOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub initial: InitialGuess,
    /// Keep every iterate (for sequence diagnostics).
    pub record_iterates: bool,
}

impl Default for ScfOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 5000,
            damping: 0.5,
            initial: InitialGuess::default(),
            record_iterates: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MinimizerResult {
    pub rho0: RadialDensity,
    pub potential: PotentialProfile,
    pub e0: f64,
    pub r_support: f64,
    pub energy: EnergyBreakdown,
    pub iterations: usize,
    pub residual: f64,
    pub energy_trace: Vec<f64>,
    pub residual_trace: Vec<f64>,
    /// Largest `KΨ^{(2mu+3)/3} / (2 (kin_0 + |E_pot|))` seen along the iteration.
    pub kinetic_bound_ratio: f64,
    pub iterates: Vec<RadialDensity>,
    pub params: ModelParams,
}

/// JSON sidecar of a [`MinimizerResult`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinimizerSummary {
    pub schema_version: u32,
    pub mu: f64,
    pub mass: f64,
    pub j_norm: f64,
    pub k11: f64,
    pub grid_n: usize,
    pub r_max: f64,
    pub e0: f64,
    pub r_support: f64,
    pub energy: EnergyBreakdown,
    pub iterations: usize,
    pub residual: f64,
    pub el_residual: f64,
}

impl MinimizerResult {
    pub fn summary(&self) -> Result<MinimizerSummary> {
        let grid = self.rho0.grid();
        Ok(MinimizerSummary {
            schema_version: CSV_SCHEMA_VERSION,
            mu: self.params.mu,
            mass: self.params.mass,
            j_norm: self.params.j_norm,
            k11: self.params.k11,
            grid_n: grid.len(),
            r_max: grid.r_max(),
            e0: self.e0,
            r_support: self.r_support,
            energy: self.energy,
            iterations: self.iterations,
            residual: self.residual,
            el_residual: euler_lagrange_residual(&self.rho0, &self.params)?,
        })
    }

    /// Writes `profile.csv` (`r,rho,U,m_enc`) and `result.json`.
    pub fn write_outputs(&self, dir: &Path) -> Result<()> {
        let mut csv = Vec::new();
        self.potential.write_csv(&mut csv)?;
        write_atomic(&dir.join("profile.csv"), &csv)?;
        write_json(&dir.join("result.json"), &self.summary()?)
    }
}

/// `K (2mu+5)/3 Ψ^{2mu/3}`: the coefficient of `ρ^{1/n}` in the first
/// variation of the kinetic term.
pub fn el_coefficient(psi: f64, params: &ModelParams) -> f64 {
    params.k_coeff() * (2.0 * params.mu + 5.0) / 3.0 * psi.powf(2.0 * params.mu / 3.0)
}

struct State {
    values: Vec<f64>,
    u: Vec<f64>,
    psi: f64,
    kinetic: f64,
    potential: f64,
}

impl State {
    fn new(grid: &RadialGrid, values: Vec<f64>, params: &ModelParams) -> Self {
        let (u, _) = potential_values(grid, &values);
        let p = psi_exponent(params.mu);
        let pw: Vec<f64> = values.iter().map(|v| v.powf(p)).collect();
        let psi = 4.0 * std::f64::consts::PI * grid.integrate_r2(&pw);
        let kinetic = params.k_coeff() * psi.powf(kinetic_power(params.mu));
        let potential = epot_values(grid, &values);
        Self {
            values,
            u,
            psi,
            kinetic,
            potential,
        }
    }

    fn total(&self) -> f64 {
        self.kinetic + self.potential
    }
}

fn initial_values(grid: &Arc<RadialGrid>, params: &ModelParams, init: &InitialGuess) -> Result<Vec<f64>> {
    let r_max = grid.r_max();
    let rho = match init {
        InitialGuess::Scaled => {
            let radius = scaled_radius(params)?.min(0.5 * r_max);
            RadialDensity::from_fn(grid.clone(), |r| if r <= radius { 1.0 } else { 0.0 })?
        }
        InitialGuess::UniformBall { radius } => {
            let radius = radius.min(0.5 * r_max);
            RadialDensity::from_fn(grid.clone(), |r| if r <= radius { 1.0 } else { 0.0 })?
        }
        InitialGuess::Gaussian { width } => RadialDensity::from_fn(grid.clone(), |r| (-(r / width).powi(2)).exp())?,
        InitialGuess::Profile(p) => {
            let nodes = p.grid().nodes();
            let vals = p.values();
            RadialDensity::from_fn(grid.clone(), |r| interpolate(nodes, vals, r))?
        }
    };
    let m = rho.mass();
    if !(m > 0.0) {
        return invalid("initial guess has no mass on the grid");
    }
    Ok(rho.scale_values(params.mass / m)?.into_values())
}

/// `2 / b` with `ρ ↦ a ρ(b ·)` mapping the unit problem onto `params`; K11
/// is absorbed into an effective `J` since only `K11 J^{-2(mu+1)/3}` enters.
fn scaled_radius(params: &ModelParams) -> Result<f64> {
    let j_eff = params.j_norm * params.k11.powf(-1.0 / j_exponent(params.mu));
    let (_, b) = scaling_map(params.mu, 1.0, 1.0, params.mass, j_eff)?;
    Ok(2.0 / b)
}

fn interpolate(x: &[f64], y: &[f64], t: f64) -> f64 {
    if t <= x[0] {
        return y[0];
    }
    if t >= x[x.len() - 1] {
        return 0.0;
    }
    let k = x.partition_point(|&v| v <= t) - 1;
    let s = (t - x[k]) / (x[k + 1] - x[k]);
    y[k] * (1.0 - s) + y[k + 1] * s
}

/// `((E0 - U)/C)_+^n` with `E0` chosen so that the mass is `params.mass`.
fn mass_fixed_profile(grid: &RadialGrid, u: &[f64], c: f64, params: &ModelParams) -> Result<(f64, Vec<f64>)> {
    let n = polytropic_index(params.mu);
    let w = grid.weights();
    let four_pi = 4.0 * std::f64::consts::PI;
    let profile_mass = |e0: f64| -> f64 {
        let mut acc = 0.0;
        for (ui, wi) in u.iter().zip(w) {
            let d = e0 - ui;
            if d > 0.0 {
                acc += wi * (d / c).powf(n);
            }
        }
        four_pi * acc
    };
    let lo = u.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = *u.last().expect("nonempty grid");
    let (m_lo, m_hi) = (profile_mass(lo), profile_mass(hi));
    if m_lo > m_hi {
        return Err(VpError::NumericFailure(format!(
            "mass is not monotone in E0 on [{lo}, {hi}]"
        )));
    }
    if m_hi < params.mass {
        return Err(VpError::GridTooSmall { r_max: grid.r_max() });
    }
    let tol = Tolerance {
        abs: 0.0,
        rel: 1e-15,
        max_iter: 300,
    };
    let e0 = brent(|e| profile_mass(e) - params.mass, lo, hi, tol)?;
    let mut values: Vec<f64> = u
        .iter()
        .map(|ui| if e0 > *ui { ((e0 - ui) / c).powf(n) } else { 0.0 })
        .collect();
    // remove the last few ulps of mass error
    let m = four_pi * grid.integrate_r2(&values);
    if m > 0.0 {
        let s = params.mass / m;
        values.iter_mut().for_each(|v| *v *= s);
    }
    Ok((e0, values))
}

/// Radius where `U` crosses `E0`, by linear interpolation between nodes.
fn crossing_radius(grid: &RadialGrid, u: &[f64], e0: f64) -> f64 {
    let r = grid.nodes();
    for i in 0..r.len() - 1 {
        if u[i] < e0 && u[i + 1] >= e0 {
            let s = (e0 - u[i]) / (u[i + 1] - u[i]);
            return r[i] + s * (r[i + 1] - r[i]);
        }
    }
    if u[0] >= e0 {
        r[0]
    } else {
        r[r.len() - 1]
    }
}

pub fn scf_minimize(params: &ModelParams, grid: Arc<RadialGrid>, opts: &ScfOptions) -> Result<MinimizerResult> {
    if !(opts.tol > 0.0) || !(opts.damping > 0.0 && opts.damping <= 1.0) || opts.max_iter == 0 {
        return invalid("tol > 0, damping in (0, 1] and max_iter > 0 are required");
    }
    let energy_slack = |e: f64| 1e-12 * e.abs().max(1.0);
    let mut state = State::new(&grid, initial_values(&grid, params, &opts.initial)?, params);
    let kin0 = state.kinetic;
    let mut theta = opts.damping;
    let mut energy_trace = vec![state.total()];
    let mut residual_trace = Vec::new();
    let mut iterates = Vec::new();
    let mut kinetic_bound_ratio: f64 = 0.0;
    if opts.record_iterates {
        iterates.push(RadialDensity::new(grid.clone(), state.values.clone())?);
    }

    for iter in 1..=opts.max_iter {
        let c = el_coefficient(state.psi, params);
        let (e0, target) = mass_fixed_profile(&grid, &state.u, c, params)?;
        let scale = state.values.iter().cloned().fold(0.0, f64::max);
        let residual = state
            .values
            .iter()
            .zip(&target)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / scale;
        residual_trace.push(residual);
        if residual <= opts.tol {
            let rho0 = RadialDensity::new(grid.clone(), target)?;
            let potential = solve_potential(&rho0);
            let fin = State::new(&grid, rho0.values().to_vec(), params);
            let r_support = crossing_radius(&grid, potential.u(), e0);
            if rho0.values()[grid.len() - 1] > 0.0 {
                return Err(VpError::GridTooSmall { r_max: grid.r_max() });
            }
            if opts.record_iterates {
                iterates.push(rho0.clone());
            }
            return Ok(MinimizerResult {
                rho0,
                potential,
                e0,
                r_support,
                energy: EnergyBreakdown::new(fin.kinetic, fin.potential),
                iterations: iter,
                residual,
                energy_trace,
                residual_trace,
                kinetic_bound_ratio,
                iterates,
                params: *params,
            });
        }

        let e_old = state.total();
        let next = loop {
            let mix: Vec<f64> = state
                .values
                .iter()
                .zip(&target)
                .map(|(a, b)| (1.0 - theta) * a + theta * b)
                .collect();
            let cand = State::new(&grid, mix, params);
            if cand.total() <= e_old + energy_slack(e_old) {
                break cand;
            }
            theta *= 0.5;
            if theta < 1e-12 {
                return Err(VpError::NotConverged(format!(
                    "damping underflow at iteration {iter} (energy {e_old:e}, residual {residual:e})"
                )));
            }
        };
        state = next;
        let ratio = state.kinetic / (2.0 * (kin0 + state.potential.abs()));
        kinetic_bound_ratio = kinetic_bound_ratio.max(ratio);
        if ratio > 1.0 {
            return Err(VpError::NumericFailure(format!(
                "kinetic term left its a priori bound at iteration {iter}"
            )));
        }
        energy_trace.push(state.total());
        if opts.record_iterates {
            iterates.push(RadialDensity::new(grid.clone(), state.values.clone())?);
        }
    }
    let last = residual_trace.last().copied().unwrap_or(f64::NAN);
    Err(VpError::NotConverged(format!(
        "no convergence in {} iterations (residual {last:e}, energy {:e})",
        opts.max_iter,
        state.total()
    )))
}

/// [`scf_minimize`] on a fresh grid, doubling `r_max` while the support
/// reaches the grid edge.
pub fn minimize(
    params: &ModelParams,
    r_max: f64,
    n: usize,
    spacing: Spacing,
    opts: &ScfOptions,
) -> Result<MinimizerResult> {
    let mut r = r_max;
    for _ in 0..=MAX_GRID_DOUBLINGS {
        let grid = make_grid(r, n, spacing)?;
        match scf_minimize(params, grid, opts) {
            Err(VpError::GridTooSmall { .. }) => r *= 2.0,
            other => return other,
        }
    }
    Err(VpError::GridTooSmall { r_max: r / 2.0 })
}

/// Two-stage solve: a coarse run on `[0, r_max]`, then a run with `n_fine`
/// nodes on a uniform grid reaching 1.25 times the coarse support radius,
/// started from the coarse profile.
pub fn minimize_refined(params: &ModelParams, r_max: f64, n_fine: usize, opts: &ScfOptions) -> Result<MinimizerResult> {
    let coarse_opts = ScfOptions {
        record_iterates: false,
        ..opts.clone()
    };
    let coarse = minimize(params, r_max, 2000, Spacing::Uniform, &coarse_opts)?;
    let mut reach = 1.25 * coarse.r_support;
    let fine_opts = ScfOptions {
        initial: InitialGuess::Profile(coarse.rho0),
        ..opts.clone()
    };
    for _ in 0..=MAX_GRID_DOUBLINGS {
        match scf_minimize(params, make_grid(reach, n_fine, Spacing::Uniform)?, &fine_opts) {
            Err(VpError::GridTooSmall { .. }) => reach *= 1.5,
            other => return other,
        }
    }
    Err(VpError::GridTooSmall { r_max: reach })
}

/// Sup over `{ρ > 1e-8 max ρ}` of `|C ρ^{1/n} + U - mean|`, relative to the
/// mean.
pub fn euler_lagrange_residual(rho: &RadialDensity, params: &ModelParams) -> Result<f64> {
    if rho.is_zero() {
        return invalid("empty support");
    }
    let c = el_coefficient(rho.psi(params.mu)?, params);
    let n = polytropic_index(params.mu);
    let pot = solve_potential(rho);
    let cut = SUPPORT_THRESHOLD * rho.max_value();
    let expr: Vec<f64> = rho
        .values()
        .iter()
        .zip(pot.u())
        .filter(|(v, _)| **v > cut)
        .map(|(v, u)| c * v.powf(1.0 / n) + u)
        .collect();
    let mean = expr.iter().sum::<f64>() / expr.len() as f64;
    let dev = expr.iter().map(|e| (e - mean).abs()).fold(0.0, f64::max);
    Ok(dev / mean.abs())
}

/// Largest node radius with `ρ > threshold · max ρ`.
pub fn support_radius(rho: &RadialDensity, threshold: f64) -> Result<f64> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return invalid(format!("threshold must lie in (0, 1), got {threshold}"));
    }
    if rho.is_zero() {
        return invalid("zero density has no support");
    }
    let cut = threshold * rho.max_value();
    let nodes = rho.grid().nodes();
    let k = rho.values().iter().rposition(|v| *v > cut).expect("nonzero density");
    Ok(nodes[k])
}
