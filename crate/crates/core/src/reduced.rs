//! The reduced functional `E_J^mu`, its scaling behaviour, the splitting
//! identity at a radius `R'` and the concentration bound built on it.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, VpError};
use crate::gravity::{epot, epot_pair};
use crate::params::{check_mu, j_exponent, kinetic_power, mass_exponent, ModelParams};
use crate::radial::RadialDensity;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kinetic_term: f64,
    pub potential_term: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn new(kinetic_term: f64, potential_term: f64) -> Self {
        Self {
            kinetic_term,
            potential_term,
            total: kinetic_term + potential_term,
        }
    }
}

/// An estimate of the infimum `R_{M,J}^mu` and the radius
/// `R_0 = M² / (-k R)` with `k = 7/3 - 2mu/3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfimumEstimate {
    pub value: f64,
    pub r0: f64,
    pub source: String,
}

impl InfimumEstimate {
    pub fn new(value: f64, mass: f64, mu: f64, source: impl Into<String>) -> Result<Self> {
        check_mu(mu)?;
        if !(value < 0.0 && value.is_finite()) {
            return invalid(format!("infimum estimate must be negative, got {value}"));
        }
        let k = concentration_k(mu);
        Ok(Self {
            value,
            r0: mass * mass / (-k * value),
            source: source.into(),
        })
    }
}

/// `k = 7/3 - 2mu/3`.
pub fn concentration_k(mu: f64) -> f64 {
    7.0 / 3.0 - 2.0 * mu / 3.0
}

/// `K Ψ(ρ)^{(2mu+3)/3} + E_pot(ρ)` without any constraint check.
pub fn functional(rho: &RadialDensity, mu: f64, k_coeff: f64) -> Result<EnergyBreakdown> {
    let psi = rho.psi(mu)?;
    let kinetic = k_coeff * psi.powf(kinetic_power(mu));
    Ok(EnergyBreakdown::new(kinetic, epot(rho)))
}

/// `E_J^mu(ρ)` for `ρ ∈ F_M^mu`. The zero density is accepted and gives zero.
pub fn energy(rho: &RadialDensity, params: &ModelParams) -> Result<EnergyBreakdown> {
    if rho.is_zero() {
        return Ok(EnergyBreakdown::new(0.0, 0.0));
    }
    rho.check_membership(params.mass, params.mu)?;
    functional(rho, params.mu, params.k_coeff())
}

fn check_positive(values: &[(&str, f64)]) -> Result<()> {
    for (name, v) in values {
        if !(*v > 0.0 && v.is_finite()) {
            return invalid(format!("{name} = {v} must be positive"));
        }
    }
    Ok(())
}

/// `(M'/M)^{(7-2mu)/3} (J'/J)^{2(mu+1)/3}`: how the infimum changes between
/// constraint values.
pub fn scaling_factor(mu: f64, mass: f64, j: f64, mass_new: f64, j_new: f64) -> Result<f64> {
    check_mu(mu)?;
    check_positive(&[("M", mass), ("J", j), ("M'", mass_new), ("J'", j_new)])?;
    Ok((mass_new / mass).powf(mass_exponent(mu)) * (j_new / j).powf(j_exponent(mu)))
}

/// `(a, b)` such that `ρ̄ = a ρ(b ·)` maps `F_M` onto `F_{M'}` and multiplies
/// both the kinetic term (with `J → J'`) and the potential term by
/// [`scaling_factor`].
///
/// Mass gives `a b^{-3} = M'/M`; equal ratios of the two terms give
/// `a^{(2mu-1)/3} b^{2-2mu} = (J'/J)^{2(mu+1)/3}`.
pub fn scaling_map(mu: f64, mass: f64, j: f64, mass_new: f64, j_new: f64) -> Result<(f64, f64)> {
    check_mu(mu)?;
    check_positive(&[("M", mass), ("J", j), ("M'", mass_new), ("J'", j_new)])?;
    let (a11, a12) = (1.0, -3.0);
    let (a21, a22) = ((2.0 * mu - 1.0) / 3.0, 2.0 - 2.0 * mu);
    let rhs1 = (mass_new / mass).ln();
    let rhs2 = j_exponent(mu) * (j_new / j).ln();
    let det = a11 * a22 - a12 * a21;
    if det.abs() < 1e-12 {
        return Err(VpError::NumericFailure(format!(
            "degenerate scaling system (det = {det:e})"
        )));
    }
    let ln_a = (rhs1 * a22 - a12 * rhs2) / det;
    let ln_b = (a11 * rhs2 - a21 * rhs1) / det;
    Ok((ln_a.exp(), ln_b.exp()))
}

/// Both sides of
/// `E_J(ρ) = E_{α1^{mu/(mu+1)} J}(ρ1) + E_{α2^{mu/(mu+1)} J}(ρ2) - ∬ ρ1 ρ2 / |x-y|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitCheck {
    pub alpha1: f64,
    pub alpha2: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

pub fn splitting_identity_check(rho: &RadialDensity, r_split: f64, params: &ModelParams) -> Result<SplitCheck> {
    let mu = params.mu;
    let psi = rho.psi(mu)?;
    if psi == 0.0 {
        return invalid("splitting identity needs Ψ(ρ) > 0");
    }
    let (inner, outer) = rho.split_at(r_split);
    let alpha1 = inner.psi(mu)? / psi;
    let alpha2 = outer.psi(mu)? / psi;
    let j_of = |alpha: f64| alpha.powf(mu / (mu + 1.0)) * params.j_norm;
    let part = |piece: &RadialDensity, alpha: f64| -> Result<f64> {
        if alpha == 0.0 {
            // empty piece: no kinetic or potential energy
            return Ok(0.0);
        }
        let k = params.k11 * j_of(alpha).powf(-j_exponent(mu));
        Ok(functional(piece, mu, k)?.total)
    };
    let lhs = functional(rho, mu, params.k_coeff())?.total;
    let rhs = part(&inner, alpha1)? + part(&outer, alpha2)? - epot_pair(&inner, &outer)?;
    Ok(SplitCheck {
        alpha1,
        alpha2,
        lhs,
        rhs,
        residual: (lhs - rhs).abs() / lhs.abs(),
    })
}

/// `lhs = E_J(ρ)`, `rhs = R + m(M-m)(1/R_0 - 1/R')` with `m` the mass
/// outside `R'`. Reported only; the infimum is an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcentrationBound {
    pub lhs: f64,
    pub rhs: f64,
    pub tail_mass: f64,
}

pub fn concentration_bound(
    rho: &RadialDensity,
    r_split: f64,
    params: &ModelParams,
    inf_est: &InfimumEstimate,
) -> Result<ConcentrationBound> {
    if !(r_split > 0.0) {
        return invalid(format!("r_split must be positive, got {r_split}"));
    }
    let lhs = functional(rho, params.mu, params.k_coeff())?.total;
    let m = rho.tail_mass(r_split);
    let total = params.mass;
    let rhs = inf_est.value + m * (total - m) * (1.0 / inf_est.r0 - 1.0 / r_split);
    Ok(ConcentrationBound { lhs, rhs, tail_mass: m })
}
