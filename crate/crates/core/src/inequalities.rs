//! Elementary inequalities behind the concentration bound, and the
//! individual links of its derivation evaluated at concrete numbers.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::params::check_mu;
use crate::reduced::{concentration_k, scaling_factor};

/// `1 - (7/3) x(1-x) - x^{7/3} - (1-x)^{7/3}`, nonnegative on `[0, 1]`.
pub fn elementary_gap(x: f64) -> f64 {
    let y = 1.0 - x;
    1.0 - 7.0 / 3.0 * x * y - x.powf(7.0 / 3.0) - y.powf(7.0 / 3.0)
}

/// `b^α - a^α - α b^{α-1} (b - a)`, nonnegative for `a, b > 0`, `0 < α < 1`.
pub fn halipo_gap(a: f64, b: f64, alpha: f64) -> f64 {
    b.powf(alpha) - a.powf(alpha) - alpha * b.powf(alpha - 1.0) * (b - a)
}

/// `(Σa)^θ (Σb)^{1-θ} - Σ a_i^θ b_i^{1-θ}`, nonnegative for `a_i, b_i ≥ 0`
/// and `θ ∈ [0, 1]`.
pub fn holder_gap(a: &[f64], b: &[f64], theta: f64) -> f64 {
    let sa: f64 = a.iter().sum();
    let sb: f64 = b.iter().sum();
    let mixed: f64 = a.iter().zip(b).map(|(x, y)| x.powf(theta) * y.powf(1.0 - theta)).sum();
    sa.powf(theta) * sb.powf(1.0 - theta) - mixed
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    Equal,
    GreaterEq,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Link {
    pub name: &'static str,
    pub relation: Relation,
    pub lhs: f64,
    pub rhs: f64,
}

impl Link {
    /// Violation measured relative to `scale`; zero when the link holds.
    pub fn violation(&self, scale: f64) -> f64 {
        let d = (self.lhs - self.rhs) / scale;
        match self.relation {
            Relation::Equal => d.abs(),
            Relation::GreaterEq => (-d).max(0.0),
        }
    }
}

/// Inputs of one evaluation of the chain. `r_value` plays the role of the
/// (negative) infimum at mass `mass` and `J = 1`; `m` is the mass outside
/// `r_prime` and `alpha1` the inner share of `Ψ`.
#[derive(Debug, Clone, Copy)]
pub struct ChainInput {
    pub mu: f64,
    pub r_value: f64,
    pub mass: f64,
    pub m: f64,
    pub alpha1: f64,
    pub r_prime: f64,
}

/// Every consecutive step of the lower bound for `E_J(ρ) - R`, from the
/// scaled infima of the two pieces down to `m(M-m)(1/R_0 - 1/R')`.
/// The common `-m(M-m)/R'` term is kept in each line.
pub fn chain_links(inp: &ChainInput) -> Result<Vec<Link>> {
    let ChainInput {
        mu,
        r_value,
        mass,
        m,
        alpha1,
        r_prime,
    } = *inp;
    check_mu(mu)?;
    if !(r_value < 0.0) || !(mass > 0.0) || !(r_prime > 0.0) {
        return invalid("chain needs R < 0, M > 0 and R' > 0");
    }
    if !(0.0..=mass).contains(&m) || !(0.0..=1.0).contains(&alpha1) {
        return invalid("chain needs 0 ≤ m ≤ M and 0 ≤ α1 ≤ 1");
    }
    let alpha2 = 1.0 - alpha1;
    let (x, y) = (m / mass, (mass - m) / mass);
    let cross = m * (mass - m) / r_prime;
    let p = (7.0 - 2.0 * mu) / 3.0;
    let theta = 2.0 * mu / 7.0;
    let r11 = r_value / mass.powf(p);

    // infimum of a piece with mass `mp` and angular-momentum weight `alpha`
    let piece = |mp: f64, alpha: f64| -> Result<f64> {
        if mp == 0.0 || alpha == 0.0 {
            return Ok(0.0);
        }
        let j = alpha.powf(mu / (mu + 1.0));
        Ok(r11 * scaling_factor(mu, 1.0, 1.0, mp, j)?)
    };
    let l1 = piece(m, alpha1)? + piece(mass - m, alpha2)? - cross;
    let l2 = r_value * (alpha1.powf(2.0 * mu / 3.0) * x.powf(p) + alpha2.powf(2.0 * mu / 3.0) * y.powf(p)) - cross;
    let a = [alpha1.powf(7.0 / 3.0), alpha2.powf(7.0 / 3.0)];
    let b = [x.powf(7.0 / 3.0), y.powf(7.0 / 3.0)];
    let l3 = r_value * (b[0].powf(1.0 - theta) * a[0].powf(theta) + b[1].powf(1.0 - theta) * a[1].powf(theta)) - cross;
    let sum_b = b[0] + b[1];
    let l4 = r_value * (a[0] + a[1]).powf(theta) * sum_b.powf(1.0 - theta) - cross;
    let l5 = r_value * (alpha1 + alpha2).powf(theta) * sum_b.powf(1.0 - theta) - cross;
    let l6 = r_value * sum_b.powf(1.0 - theta) - cross;
    let base = 1.0 - 7.0 / 3.0 * x * y;
    let l7 = r_value * base.powf(1.0 - theta) - cross;

    // second display: subtract R from the last line
    let d1 = -r_value * (1.0 - base.powf(1.0 - theta)) - cross;
    let d2 = -(7.0 - 2.0 * mu) / 3.0 * x * y * r_value - cross;
    let r0 = mass * mass / (-concentration_k(mu) * r_value);
    let d3 = m * (mass - m) * (1.0 / r0 - 1.0 / r_prime);

    use Relation::*;
    let link = |name, relation, lhs, rhs| Link {
        name,
        relation,
        lhs,
        rhs,
    };
    Ok(vec![
        link("scaling", Equal, l1, l2),
        link("exponent_rewrite", Equal, l2, l3),
        link("holder", GreaterEq, l3, l4),
        link("power_below_linear", GreaterEq, l4, l5),
        link("alpha_sum", Equal, l5, l6),
        link("elementary", GreaterEq, l6, l7),
        link("shift", Equal, l7 - r_value, d1),
        link("halipo", GreaterEq, d1, d2),
        link("r0_identity", Equal, d2, d3),
    ])
}
