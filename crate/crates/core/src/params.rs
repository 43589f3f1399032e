//! Model parameters and the exponents that depend on `mu`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Upper end of the admissible exponent range `0 < mu < 7/2`.
pub const MU_MAX: f64 = 3.5;

/// Exponent `(2mu+5)/(2mu+3)` of the reduced kinetic integrand.
pub fn psi_exponent(mu: f64) -> f64 {
    (2.0 * mu + 5.0) / (2.0 * mu + 3.0)
}

/// Power `(2mu+3)/3` applied to the integral in the kinetic term.
pub fn kinetic_power(mu: f64) -> f64 {
    (2.0 * mu + 3.0) / 3.0
}

/// Exponent `1 + 1/mu` of the phase-space norm constraint.
pub fn phase_space_exponent(mu: f64) -> f64 {
    1.0 + 1.0 / mu
}

/// Polytropic index of the minimizer, `mu + 3/2`.
pub fn polytropic_index(mu: f64) -> f64 {
    mu + 1.5
}

/// Exponent of `J` in `K = K11 / J^{2(mu+1)/3}`.
pub fn j_exponent(mu: f64) -> f64 {
    2.0 * (mu + 1.0) / 3.0
}

/// Exponent of the mass in the scaling law of the infimum, `(7-2mu)/3`.
pub fn mass_exponent(mu: f64) -> f64 {
    (7.0 - 2.0 * mu) / 3.0
}

pub fn check_mu(mu: f64) -> Result<()> {
    if !(mu > 0.0 && mu < MU_MAX) {
        return invalid(format!("mu = {mu} outside (0, 7/2)"));
    }
    Ok(())
}

/// `(mu, M, J, K11)`; the kinetic coefficient `K` is derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub mu: f64,
    pub mass: f64,
    pub j_norm: f64,
    pub k11: f64,
}

impl ModelParams {
    pub fn new(mu: f64, mass: f64, j_norm: f64, k11: f64) -> Result<Self> {
        check_mu(mu)?;
        for (name, v) in [("mass", mass), ("j_norm", j_norm), ("k11", k11)] {
            if !(v > 0.0 && v.is_finite()) {
                return invalid(format!("{name} = {v} must be positive and finite"));
            }
        }
        Ok(Self { mu, mass, j_norm, k11 })
    }

    /// `K = K11 * J^{-2(mu+1)/3}`.
    pub fn k_coeff(&self) -> f64 {
        self.k11 * self.j_norm.powf(-j_exponent(self.mu))
    }

    pub fn with_j(&self, j_norm: f64) -> Result<Self> {
        Self::new(self.mu, self.mass, j_norm, self.k11)
    }

    pub fn with_mass(&self, mass: f64) -> Result<Self> {
        Self::new(self.mu, mass, self.j_norm, self.k11)
    }

    pub fn with_k11(&self, k11: f64) -> Result<Self> {
        Self::new(self.mu, self.mass, self.j_norm, k11)
    }

    pub fn psi_exponent(&self) -> f64 {
        psi_exponent(self.mu)
    }

    pub fn kinetic_power(&self) -> f64 {
        kinetic_power(self.mu)
    }

    pub fn polytropic_index(&self) -> f64 {
        polytropic_index(self.mu)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponents_at_mu_one() {
        assert_eq!(phase_space_exponent(1.0), 2.0);
        assert!((psi_exponent(1.0) - 7.0 / 5.0).abs() < 1e-15);
        assert!((psi_exponent(1.5) - 4.0 / 3.0).abs() < 1e-15);
        assert!((polytropic_index(1.5) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn k_coeff_definition() {
        let p = ModelParams::new(1.5, 1.0, 2.0, 3.0).unwrap();
        let expected = 3.0 * 2f64.powf(-2.0 * 2.5 / 3.0);
        assert!((p.k_coeff() - expected).abs() <= 1e-15 * expected);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(ModelParams::new(3.5, 1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, -1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 0.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 1.0, f64::NAN).is_err());
    }
}
