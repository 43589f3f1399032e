//! Kinetic reduction: the least kinetic energy of an isotropic phase-space
//! density `f(x, v)` with prescribed spatial density `∫ f dv = ρ(x)` and
//! norm `‖f‖_{1+1/mu} = J`, and the lift of a spatial minimizer back to
//! phase space.
//!
//! The optimal profile at each `x` is `g(w) = ((c(x) - w²/2)/λ)_+^mu`.
//! Velocity integrals use `VELOCITY_NODES` equispaced speeds in
//! `[0, 1.01 √(2c)]`: product-trapezoid weights for the optimal family,
//! plain trapezoid weights for sampled profiles.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, VpError};
use crate::gravity::PotentialProfile;
use crate::params::{check_mu, j_exponent, kinetic_power, phase_space_exponent};
use crate::radial::{make_grid, RadialDensity, Spacing, CSV_SCHEMA_VERSION};
use crate::roots::{brent, Tolerance};

pub const VELOCITY_NODES: usize = 4096;
const CUTOFF_MARGIN: f64 = 1.01;

/// An isotropic slice `f(x, ·)` sampled at equispaced speeds.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityProfile {
    pub speeds: Vec<f64>,
    pub values: Vec<f64>,
}

fn trapezoid_shell_weights(speeds: &[f64]) -> Vec<f64> {
    let m = speeds.len();
    let dw = speeds[1] - speeds[0];
    speeds
        .iter()
        .enumerate()
        .map(|(j, w)| {
            let t = if j == 0 || j == m - 1 { 0.5 } else { 1.0 };
            t * dw * 4.0 * PI * w * w
        })
        .collect()
}

impl VelocityProfile {
    /// `((c - w²/2)/λ)_+^mu` on the grid for cutoff `c`.
    pub fn optimal(c: f64, lambda: f64, mu: f64) -> Self {
        let w_max = CUTOFF_MARGIN * (2.0 * c.max(0.0)).sqrt();
        let speeds: Vec<f64> = (0..VELOCITY_NODES)
            .map(|j| w_max * j as f64 / (VELOCITY_NODES - 1) as f64)
            .collect();
        let values = speeds
            .iter()
            .map(|w| {
                let d = c - 0.5 * w * w;
                if d > 0.0 {
                    (d / lambda).powf(mu)
                } else {
                    0.0
                }
            })
            .collect();
        Self { speeds, values }
    }

    pub fn weights(&self) -> Vec<f64> {
        if self.speeds.len() < 2 || self.speeds[1] == self.speeds[0] {
            return vec![0.0; self.speeds.len()];
        }
        trapezoid_shell_weights(&self.speeds)
    }

    /// `∫ g dv`.
    pub fn density(&self) -> f64 {
        self.weights().iter().zip(&self.values).map(|(a, b)| a * b).sum()
    }

    /// `∫ |v|²/2 g dv`.
    pub fn kinetic(&self) -> f64 {
        self.weights()
            .iter()
            .zip(&self.values)
            .zip(&self.speeds)
            .map(|((a, b), w)| a * b * 0.5 * w * w)
            .sum()
    }

    /// `∫ g^q dv`.
    pub fn power_integral(&self, q: f64) -> f64 {
        self.weights()
            .iter()
            .zip(&self.values)
            .map(|(a, b)| a * b.powf(q))
            .sum()
    }
}

/// `∫ (c - w²/2)_+^mu 4π w² dw`, zero for `c ≤ 0`.
pub fn ansatz_density(c: f64, mu: f64) -> f64 {
    if c <= 0.0 {
        return 0.0;
    }
    let (m0, _) = normalized_moments(mu);
    m0 * c.powf(mu + 1.5)
}

/// Velocity moments at `c = 1` (`w* = √2`) on the grid
/// `w_j = 1.01 w* j / (VELOCITY_NODES - 1)`:
/// `(∫ (1 - w²/2)_+^p dv, ∫ |v|²/2 (1 - w²/2)_+^p dv)`.
///
/// Writing `(1 - w²/2)^p = 2^{-p} (w* - w)^p (w* + w)^p`, the smooth cofactor
/// is interpolated linearly on each cell and integrated exactly against
/// `(w* - w)^p`, so the endpoint singularity costs nothing. The grid for
/// cutoff `c` is the same grid scaled by `√c`, hence moments scale as
/// `c^{p+3/2}` and `c^{p+5/2}`.
fn normalized_moments(p: f64) -> (f64, f64) {
    let w_star = 2f64.sqrt();
    let dw = CUTOFF_MARGIN * w_star / (VELOCITY_NODES - 1) as f64;
    let cofactor = |w: f64| 2f64.powf(-p) * (w_star + w).powf(p) * 4.0 * PI * w * w;
    let mut m0 = 0.0;
    let mut m2 = 0.0;
    let mut j = 0;
    loop {
        let wa = j as f64 * dw;
        if wa >= w_star {
            break;
        }
        let wb = ((j + 1) as f64 * dw).min(w_star);
        let (ta, tb) = (w_star - wa, w_star - wb);
        let len = ta - tb;
        let i0 = (ta.powf(p + 1.0) - tb.powf(p + 1.0)) / (p + 1.0);
        let i1 = (ta.powf(p + 2.0) - tb.powf(p + 2.0)) / (p + 2.0);
        // weights of the values at wa (t = ta) and wb (t = tb)
        let ja = (i1 - tb * i0) / len;
        let jb = (ta * i0 - i1) / len;
        let (sa, sb) = (cofactor(wa), cofactor(wb));
        m0 += ja * sa + jb * sb;
        m2 += ja * sa * 0.5 * wa * wa + jb * sb * 0.5 * wb * wb;
        j += 1;
    }
    (m0, m2)
}

struct Quadrature {
    mu: f64,
    dens: (f64, f64),
    power: f64,
}

impl Quadrature {
    fn new(mu: f64) -> Self {
        Self {
            mu,
            dens: normalized_moments(mu),
            power: normalized_moments(mu + 1.0).0,
        }
    }

    /// `(∫ (c - w²/2)_+^mu dv, ∫ |v|²/2 (c - w²/2)_+^mu dv)` for `c > 0`.
    fn moments(&self, c: f64) -> (f64, f64) {
        let s = c.powf(self.mu + 1.5);
        (self.dens.0 * s, self.dens.1 * s * c)
    }

    /// `∫ (c - w²/2)_+^{mu+1} dv`.
    fn power_moment(&self, c: f64) -> f64 {
        self.power * c.powf(self.mu + 2.5)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionResult {
    pub schema_version: u32,
    pub mu: f64,
    pub j_norm: f64,
    pub psi: f64,
    pub ekin_min: f64,
    pub k11_fit: f64,
    pub lagrange_lambda: f64,
    pub per_point_c: Vec<f64>,
    pub outer_iterations: usize,
    /// `max |∫ f dv - ρ| / ρ` over points with `ρ > 0`.
    pub density_residual: f64,
    /// `|‖f‖ - J| / J`.
    pub norm_residual: f64,
}

fn inner_cutoff(quad: &Quadrature, target: f64, guess: f64) -> Result<f64> {
    let f = |c: f64| quad.moments(c).0 - target;
    let mut lo = guess;
    let mut hi = guess;
    while f(lo) > 0.0 {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(VpError::NumericFailure("inner bracket underflow".into()));
        }
    }
    while f(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(VpError::NumericFailure("inner bracket overflow".into()));
        }
    }
    if lo == hi {
        return Ok(lo);
    }
    let tol = Tolerance {
        abs: 0.0,
        rel: 1e-15,
        max_iter: 200,
    };
    brent(f, lo, hi, tol).map_err(|e| VpError::NumericFailure(format!("inner root for target {target:e}: {e}")))
}

struct Pass {
    c: Vec<f64>,
    norm_q: f64,
    kinetic: f64,
    density_residual: f64,
}

fn solve_pass(quad: &Quadrature, rho: &RadialDensity, mu: f64, lambda: f64, guess: &[f64]) -> Result<Pass> {
    let w = rho.grid().weights();
    let lam_mu = lambda.powf(mu);
    let mut c = vec![0.0; rho.values().len()];
    let mut norm_q = 0.0;
    let mut kinetic = 0.0;
    let mut density_residual: f64 = 0.0;
    let mut last = 1.0;
    for (i, &r) in rho.values().iter().enumerate() {
        if r <= 0.0 {
            continue;
        }
        let g = if guess[i] > 0.0 { guess[i] } else { last };
        let ci = inner_cutoff(quad, lam_mu * r, g)?;
        last = ci;
        c[i] = ci;
        let (dens, kin) = quad.moments(ci);
        let pw = quad.power_moment(ci);
        let shell = 4.0 * PI * w[i];
        density_residual = density_residual.max((dens / lam_mu - r).abs() / r);
        kinetic += shell * kin / lam_mu;
        // (d/λ)^{mu q} = (d/λ)^{mu+1}
        norm_q += shell * pw / lambda.powf(mu + 1.0);
    }
    Ok(Pass {
        c,
        norm_q,
        kinetic,
        density_residual,
    })
}

/// Minimizes the kinetic energy over phase-space densities with spatial
/// density `ρ` and `‖f‖_{1+1/mu} = J`.
///
/// For each `λ` the cutoffs `c(x)` are found by root finding on the velocity
/// quadrature; `λ` itself is found by a secant iteration on `ln ‖f‖` against
/// `ln λ`.
pub fn global_reduce(rho: &RadialDensity, j: f64, mu: f64) -> Result<ReductionResult> {
    check_mu(mu)?;
    if !(j > 0.0 && j.is_finite()) {
        return invalid(format!("J must be positive, got {j}"));
    }
    if rho.is_zero() {
        return invalid("reduction needs a nonzero density");
    }
    let quad = Quadrature::new(mu);
    let q = phase_space_exponent(mu);
    let target = j.ln();
    let ln_norm = |p: &Pass| p.norm_q.ln() / q;

    let mut l0: f64 = 0.0;
    let mut p0 = solve_pass(&quad, rho, mu, 1.0, &vec![0.0; rho.values().len()])?;
    let mut l1: f64 = 1.0;
    let mut p1 = solve_pass(&quad, rho, mu, l1.exp(), &p0.c)?;
    let mut iterations = 2;
    while (ln_norm(&p1) - target).abs() > 1e-13 {
        if iterations >= 60 {
            return Err(VpError::NumericFailure(format!(
                "outer iteration on λ did not converge (‖f‖ = {}, J = {j})",
                ln_norm(&p1).exp()
            )));
        }
        let (f0, f1) = (ln_norm(&p0) - target, ln_norm(&p1) - target);
        let slope = (f1 - f0) / (l1 - l0);
        if !(slope.is_finite() && slope != 0.0) {
            return Err(VpError::NumericFailure("flat outer iteration on λ".into()));
        }
        let l2 = l1 - f1 / slope;
        let guess: Vec<f64> = p1.c.clone();
        let p2 = solve_pass(&quad, rho, mu, l2.exp(), &guess)?;
        (l0, p0) = (l1, p1);
        (l1, p1) = (l2, p2);
        iterations += 1;
    }
    let psi = rho.psi(mu)?;
    let norm = ln_norm(&p1).exp();
    Ok(ReductionResult {
        schema_version: CSV_SCHEMA_VERSION,
        mu,
        j_norm: j,
        psi,
        ekin_min: p1.kinetic,
        k11_fit: p1.kinetic * j.powf(j_exponent(mu)) / psi.powf(kinetic_power(mu)),
        lagrange_lambda: l1.exp(),
        per_point_c: p1.c,
        outer_iterations: iterations,
        density_residual: p1.density_residual,
        norm_residual: (norm - j).abs() / j,
    })
}

/// Kinetic energy and norm of a feasible competitor `f = g (1 + s η1 + t η2)`
/// where `g` is the optimal profile, `η1, η2` have zero `g`-weighted mean at
/// every point (so `∫ f dv = ρ`), `s` is random and `t` restores the norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Competitor {
    pub ekin: f64,
    pub norm: f64,
    pub max_density_error: f64,
}

pub fn random_competitor<R: Rng>(
    res: &ReductionResult,
    rho: &RadialDensity,
    points: usize,
    rng: &mut R,
) -> Result<Competitor> {
    let mu = res.mu;
    let q = phase_space_exponent(mu);
    let w = rho.grid().weights();
    let support: Vec<usize> = (0..rho.values().len()).filter(|&i| res.per_point_c[i] > 0.0).collect();
    if support.is_empty() {
        return invalid("empty support");
    }
    let lambda = res.lagrange_lambda;
    let picked: Vec<usize> = (0..points.max(1))
        .map(|_| support[rng.gen_range(0..support.len())])
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();

    struct Slice {
        shell: f64,
        weights: Vec<f64>,
        g: Vec<f64>,
        speeds: Vec<f64>,
        eta1: Vec<f64>,
        eta2: Vec<f64>,
    }
    let mut slices = Vec::new();
    for &i in &picked {
        let prof = VelocityProfile::optimal(res.per_point_c[i], lambda, mu);
        let weights = prof.weights();
        let g = prof.values.clone();
        let w_max = *prof.speeds.last().expect("nonempty");
        let mass: f64 = weights.iter().zip(&g).map(|(a, b)| a * b).sum();
        let center = |eta: Vec<f64>| -> Vec<f64> {
            let mean = weights
                .iter()
                .zip(&g)
                .zip(&eta)
                .map(|((a, b), e)| a * b * e)
                .sum::<f64>()
                / mass;
            let mut out: Vec<f64> = eta.iter().map(|e| e - mean).collect();
            let m = out.iter().map(|e| e.abs()).fold(0.0, f64::max);
            if m > 0.0 {
                out.iter_mut().for_each(|e| *e /= m);
            }
            out
        };
        let (k1, k2, ph): (f64, f64, f64) = (
            rng.gen_range(1.0..6.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(0.0..PI),
        );
        let eta1 = center(
            prof.speeds
                .iter()
                .map(|v| (k1 * PI * v / w_max + ph).cos() + k2 * v / w_max)
                .collect(),
        );
        // decreases the norm to first order
        let eta2 = center(g.iter().map(|v| -v.powf(1.0 / mu)).collect());
        slices.push(Slice {
            shell: 4.0 * PI * w[i],
            weights,
            g,
            speeds: prof.speeds,
            eta1,
            eta2,
        });
    }

    // change of ‖f‖^q relative to the optimum; kept separate from ‖f‖^q
    // itself so points with tiny shell weight are not lost to rounding
    let delta_q = |s: f64, t: f64| -> f64 {
        let mut acc = 0.0;
        for sl in &slices {
            let mut loc = 0.0;
            for k in 0..sl.g.len() {
                let f = sl.g[k] * (1.0 + s * sl.eta1[k] + t * sl.eta2[k]);
                loc += sl.weights[k] * (f.max(0.0).powf(q) - sl.g[k].powf(q));
            }
            acc += sl.shell * loc;
        }
        acc
    };
    // the t-direction may be too weak to undo a large s-step; shrink s then
    let t_max = 0.6;
    let mut s = rng.gen_range(-0.3..0.3);
    let mut found = None;
    for _ in 0..30 {
        let h = |t: f64| delta_q(s, t);
        let h0 = h(0.0);
        if h0 == 0.0 {
            found = Some(0.0);
            break;
        }
        let (lo, hi) = if h0 > 0.0 { (0.0, t_max) } else { (-t_max, 0.0) };
        if h(lo) * h(hi) < 0.0 {
            found = Some(brent(h, lo, hi, Tolerance::default())?);
            break;
        }
        s *= 0.5;
    }
    let Some(t) = found else {
        return Err(VpError::NumericFailure("competitor cannot restore the norm".into()));
    };

    let mut ekin = res.ekin_min;
    let mut max_density_error: f64 = 0.0;
    for sl in &slices {
        let mut kin_g = 0.0;
        let mut kin_f = 0.0;
        let mut dens_g = 0.0;
        let mut dens_f = 0.0;
        for k in 0..sl.g.len() {
            let f = sl.g[k] * (1.0 + s * sl.eta1[k] + t * sl.eta2[k]);
            let e = 0.5 * sl.speeds[k] * sl.speeds[k];
            kin_g += sl.weights[k] * sl.g[k] * e;
            kin_f += sl.weights[k] * f * e;
            dens_g += sl.weights[k] * sl.g[k];
            dens_f += sl.weights[k] * f;
        }
        ekin += sl.shell * (kin_f - kin_g);
        max_density_error = max_density_error.max((dens_f - dens_g).abs() / dens_g);
    }
    Ok(Competitor {
        ekin,
        norm: (res.j_norm.powf(q) + delta_q(s, t)).powf(1.0 / q),
        max_density_error,
    })
}

/// Diagnostics of `f0 = κ (E0 - |v|²/2 - U)_+^mu` with `κ` fixed by the mass
/// of `ρ0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LiftDiagnostics {
    pub kappa: f64,
    pub zero_lift: bool,
    /// `max |∫ f0 dv - ρ0| / max ρ0`.
    pub density_error: f64,
    pub mass: f64,
    pub norm: f64,
    pub ekin: f64,
}

pub fn lift_minimizer(rho0: &RadialDensity, potential: &PotentialProfile, e0: f64, mu: f64) -> Result<LiftDiagnostics> {
    check_mu(mu)?;
    if !rho0.grid().same_nodes(potential.grid()) {
        return invalid("density and potential live on different grids");
    }
    let q = phase_space_exponent(mu);
    let quad = Quadrature::new(mu);
    let u = potential.u();
    let w = rho0.grid().weights();
    if e0 <= potential.min_u() {
        return Ok(LiftDiagnostics {
            kappa: 0.0,
            zero_lift: true,
            density_error: rho0.max_value(),
            mass: 0.0,
            norm: 0.0,
            ekin: 0.0,
        });
    }
    let mut dens = vec![0.0; u.len()];
    let mut kin = vec![0.0; u.len()];
    let mut pw = vec![0.0; u.len()];
    for i in 0..u.len() {
        let c = e0 - u[i];
        if c > 0.0 {
            (dens[i], kin[i]) = quad.moments(c);
            pw[i] = quad.power_moment(c);
        }
    }
    let raw_mass: f64 = (0..u.len()).map(|i| 4.0 * PI * w[i] * dens[i]).sum();
    let kappa = rho0.mass() / raw_mass;
    let scale = rho0.max_value();
    let density_error = rho0
        .values()
        .iter()
        .zip(&dens)
        .map(|(r, d)| (kappa * d - r).abs())
        .fold(0.0, f64::max)
        / scale;
    let sum = |v: &[f64]| -> f64 { (0..u.len()).map(|i| 4.0 * PI * w[i] * v[i]).sum() };
    Ok(LiftDiagnostics {
        kappa,
        zero_lift: false,
        density_error,
        mass: kappa * raw_mass,
        norm: (kappa.powf(q) * sum(&pw)).powf(1.0 / q),
        ekin: kappa * sum(&kin),
    })
}

/// `K11(mu)` measured by [`global_reduce`] on a fixed reference density;
/// cached per `mu`.
pub fn k11_oracle(mu: f64) -> Result<f64> {
    check_mu(mu)?;
    static CACHE: OnceLock<Mutex<HashMap<u64, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().expect("cache lock").get(&mu.to_bits()) {
        return Ok(*v);
    }
    let grid = make_grid(6.0, 160, Spacing::Log)?;
    let rho = RadialDensity::from_fn(grid, |r| (-r * r).exp())?;
    let k = global_reduce(&rho, 1.0, mu)?.k11_fit;
    cache.lock().expect("cache lock").insert(mu.to_bits(), k);
    Ok(k)
}
