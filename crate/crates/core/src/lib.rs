//! Minimizers of the reduced gravitational energy functional
//!
//! `E_J^mu(ρ) = K Ψ(ρ)^{(2mu+3)/3} + E_pot(ρ)`, `Ψ(ρ) = ∫ ρ^{(2mu+5)/(2mu+3)} dx`,
//!
//! over nonnegative radial densities of fixed mass, together with numerical
//! checks of the structure around it: scaling laws, the splitting identity and
//! concentration bound, the kinetic reduction from phase space, symmetric
//! decreasing rearrangement and convergence diagnostics for sequences.
//!
//! Units have `G = 1`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gravity;
pub mod inequalities;
pub mod io;
pub mod kinetic;
pub mod lane_emden;
pub mod minimizer;
pub mod params;
pub mod radial;
pub mod rearrange;
pub mod reduced;
pub mod roots;
pub mod sampling;
pub mod sequences;
pub mod verify;

pub use error::{Result, VpError};
pub use gravity::{epot, epot_cutoff, epot_pair, solve_potential, PotentialProfile};
pub use params::ModelParams;
pub use radial::{make_grid, RadialDensity, RadialGrid, Spacing};
pub use reduced::{energy, scaling_factor, scaling_map, EnergyBreakdown, InfimumEstimate};
