//! Randomized property suites, each reporting pass/fail per property.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, VpError};
use crate::gravity::{epot, epot_cutoff, epot_pair};
use crate::inequalities::{chain_links, elementary_gap, halipo_gap, ChainInput};
use crate::kinetic::{global_reduce, lift_minimizer, random_competitor};
use crate::lane_emden::{compare_with_polytrope, lane_emden, LaneEmdenOptions};
use crate::minimizer::{euler_lagrange_residual, minimize_refined, MinimizerResult, ScfOptions};
use crate::params::{j_exponent, kinetic_power, polytropic_index, ModelParams};
use crate::radial::{make_grid, RadialDensity, Spacing, CSV_SCHEMA_VERSION};
use crate::rearrange::{confinement_decomposition, interaction, rearrange, translate, Kernel};
use crate::reduced::{
    concentration_bound, energy, functional, scaling_factor, scaling_map, splitting_identity_check, InfimumEstimate,
};
use crate::sampling::{random_cartesian, random_radial_density};
use crate::sequences::{
    bump_sequence, epot_difference, escaping_tail_sequence, field_distance, log_log_slope, sequence_report,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Scaling,
    Concentration,
    Riesz,
    Reduction,
    LaneEmden,
    Sequences,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Scaling,
        Suite::Concentration,
        Suite::Riesz,
        Suite::Reduction,
        Suite::LaneEmden,
        Suite::Sequences,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Scaling => "scaling",
            Suite::Concentration => "concentration",
            Suite::Riesz => "riesz",
            Suite::Reduction => "reduction",
            Suite::LaneEmden => "lane-emden",
            Suite::Sequences => "sequences",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = VpError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| VpError::InvalidArgument(format!("unknown suite '{s}'")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    pub passed: bool,
    pub count: usize,
    pub violations: usize,
    pub max_violation: f64,
    pub tolerance: f64,
}

/// Accumulates violations of one property; each sample contributes an
/// excess amount which must stay at or below `tolerance`.
struct Tally {
    name: String,
    tolerance: f64,
    count: usize,
    violations: usize,
    max_violation: f64,
}

impl Tally {
    fn new(name: impl Into<String>, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            tolerance,
            count: 0,
            violations: 0,
            max_violation: 0.0,
        }
    }

    fn add(&mut self, excess: f64) {
        self.count += 1;
        let e = if excess.is_nan() { f64::INFINITY } else { excess };
        self.max_violation = self.max_violation.max(e);
        if e > self.tolerance {
            self.violations += 1;
        }
    }

    fn finish(self) -> PropertyCheck {
        PropertyCheck {
            passed: self.violations == 0 && self.count > 0,
            name: self.name,
            count: self.count,
            violations: self.violations,
            max_violation: self.max_violation,
            tolerance: self.tolerance,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub suite: String,
    pub seed: u64,
    pub mu: f64,
    pub passed: bool,
    pub properties: Vec<PropertyCheck>,
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyConfig {
    pub params: ModelParams,
    pub seed: u64,
    /// Nodes of the fine grid used for minimizers.
    pub grid_n: usize,
    pub r_max: f64,
    pub scf: ScfSettings,
}

#[derive(Debug, Clone, Copy)]
pub struct ScfSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
}

impl Default for ScfSettings {
    fn default() -> Self {
        let d = ScfOptions::default();
        Self {
            tol: d.tol,
            max_iter: d.max_iter,
            damping: d.damping,
        }
    }
}

impl VerifyConfig {
    pub fn new(params: ModelParams, seed: u64) -> Self {
        Self {
            params,
            seed,
            grid_n: 8000,
            r_max: 20.0,
            scf: ScfSettings::default(),
        }
    }

    fn scf_options(&self) -> ScfOptions {
        ScfOptions {
            tol: self.scf.tol,
            max_iter: self.scf.max_iter,
            damping: self.scf.damping,
            ..Default::default()
        }
    }

    fn rng(&self, suite: Suite) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ (suite as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }
}

pub fn run_suite(suite: Suite, cfg: &VerifyConfig) -> Result<SuiteReport> {
    let properties = match suite {
        Suite::Scaling => scaling_suite(cfg)?,
        Suite::Concentration => concentration_suite(cfg)?,
        Suite::Riesz => riesz_suite(cfg)?,
        Suite::Reduction => reduction_suite(cfg)?,
        Suite::LaneEmden => lane_emden_suite(cfg)?,
        Suite::Sequences => sequences_suite(cfg)?,
    };
    Ok(SuiteReport {
        schema_version: CSV_SCHEMA_VERSION,
        suite: suite.name().to_string(),
        seed: cfg.seed,
        mu: cfg.params.mu,
        passed: properties.iter().all(|p| p.passed),
        properties,
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn scaling_suite(cfg: &VerifyConfig) -> Result<Vec<PropertyCheck>> {
    let mut rng = cfg.rng(Suite::Scaling);
    let p = cfg.params;
    let mu = p.mu;
    let grid = make_grid(40.0, 800, Spacing::Log)?;
    let rho = random_radial_density(grid.clone(), p.mass, &mut rng)?;
    let base = functional(&rho, mu, p.k_coeff())?;

    let mut terms = Tally::new("scaling_law_per_term", 1e-8);
    let mut inverse = Tally::new("scaling_map_inverse", 1e-10);
    for _ in 0..50 {
        let mn = p.mass * rng.gen_range(0.2..5.0);
        let jn = p.j_norm * rng.gen_range(0.2..5.0);
        let (a, b) = scaling_map(mu, p.mass, p.j_norm, mn, jn)?;
        let f = scaling_factor(mu, p.mass, p.j_norm, mn, jn)?;
        let s = rho.rescale(a, b)?;
        let k_new = p.k11 * jn.powf(-j_exponent(mu));
        let e = functional(&s, mu, k_new)?;
        terms.add(rel(e.kinetic_term / base.kinetic_term, f));
        terms.add(rel(e.potential_term / base.potential_term, f));
        terms.add(rel(s.mass(), mn));
        let (ai, bi) = scaling_map(mu, mn, jn, p.mass, p.j_norm)?;
        inverse.add((a * ai - 1.0).abs().max((b * bi - 1.0).abs()));
    }

    let mut split = Tally::new("splitting_identity", 1e-10);
    for _ in 0..20 {
        let r = random_radial_density(grid.clone(), p.mass, &mut rng)?;
        let params = p.with_mass(r.mass())?;
        for _ in 0..5 {
            let r_split = rng.gen_range(0.05..0.6) * grid.r_max();
            split.add(splitting_identity_check(&r, r_split, &params)?.residual);
        }
    }
    Ok(vec![terms.finish(), inverse.finish(), split.finish()])
}

fn concentration_suite(cfg: &VerifyConfig) -> Result<Vec<PropertyCheck>> {
    let mut rng = cfg.rng(Suite::Concentration);
    let p = cfg.params;
    let mu = p.mu;

    let mut elem = Tally::new("elementary_inequality", 1e-12);
    for _ in 0..100_000 {
        elem.add(-elementary_gap(rng.gen_range(0.0..=1.0)));
    }
    let mut hlp = Tally::new("halipo_inequality", 1e-12);
    for _ in 0..100_000 {
        let a = rng.gen_range(1e-3..10.0);
        let b = rng.gen_range(1e-3..10.0);
        hlp.add(-halipo_gap(a, b, rng.gen_range(1e-3..1.0)));
    }
    let mut chain = Tally::new("concentration_chain_links", 1e-12);
    for _ in 0..10_000 {
        let inp = ChainInput {
            mu,
            r_value: -rng.gen_range(0.05..5.0),
            mass: p.mass,
            m: rng.gen_range(0.0..=p.mass),
            alpha1: rng.gen_range(0.0..=1.0),
            r_prime: rng.gen_range(0.1..20.0),
        };
        for link in chain_links(&inp)? {
            let scale = link.lhs.abs().max(link.rhs.abs()).max(1.0);
            chain.add(link.violation(scale));
        }
    }

    let mut newton = Tally::new("newton_bound", 1e-10);
    let grid = make_grid(30.0, 1500, Spacing::Uniform)?;
    for _ in 0..100 {
        let rho = random_radial_density(grid.clone(), p.mass, &mut rng)?;
        let r_split = rng.gen_range(0.5..20.0);
        let (inner, outer) = rho.split_at(r_split);
        let m = outer.mass();
        newton.add(epot_pair(&inner, &outer)? - m * (p.mass - m) / r_split);
    }

    let min = minimize_refined(&p, cfg.r_max, 2000, &cfg.scf_options())?;
    let est = InfimumEstimate::new(min.energy.total, p.mass, mu, "SCF minimizer")?;
    let mut at_min = Tally::new("minimizer_equality_at_zero_tail", 1e-12);
    let b = concentration_bound(&min.rho0, 1.01 * min.r_support, &p, &est)?;
    at_min.add(b.tail_mass);
    at_min.add((b.lhs - b.rhs).abs() / b.lhs.abs());
    let mut bound = Tally::new("concentration_bound_random", 1e-9);
    let grid = make_grid(8.0 * min.r_support, 2000, Spacing::Uniform)?;
    for _ in 0..50 {
        let rho = random_radial_density(grid.clone(), p.mass, &mut rng)?;
        let r_split = rng.gen_range(0.2..3.0) * est.r0;
        let b = concentration_bound(&rho, r_split, &p, &est)?;
        bound.add((b.rhs - b.lhs) / b.lhs.abs());
    }
    Ok(vec![
        elem.finish(),
        hlp.finish(),
        chain.finish(),
        newton.finish(),
        at_min.finish(),
        bound.finish(),
    ])
}

fn riesz_suite(cfg: &VerifyConfig) -> Result<Vec<PropertyCheck>> {
    let mut rng = cfg.rng(Suite::Riesz);
    let n = 12;
    let h = 1.0;
    let kernels = [
        Kernel::Coulomb,
        Kernel::Cutoff(0.5),
        Kernel::Cutoff(0.2),
        Kernel::Cutoff(0.08),
    ];
    let mut riesz = Tally::new("riesz_inequality", 1e-12);
    let mut equi = Tally::new("equimeasurability", 0.0);
    let mut conf = Tally::new("confinement_decomposition", 1e-10);
    let mut trans = Tally::new("translation_invariance", 1e-12);
    for _ in 0..200 {
        let rho = random_cartesian(n, h, &mut rng)?;
        let star = rearrange(&rho);
        for k in kernels {
            let a = interaction(&rho, &rho, k)?;
            let b = interaction(&star, &star, k)?;
            riesz.add((a - b) / b);
        }
        let mut x = rho.values().to_vec();
        let mut y = star.values().to_vec();
        x.sort_by(f64::total_cmp);
        y.sort_by(f64::total_cmp);
        equi.add(if x == y { 0.0 } else { 1.0 });
        let r0 = rng.gen_range(1.0..3.0);
        let c = confinement_decomposition(&rho, r0, 3.0 * r0)?;
        conf.add(c.violation() / c.interaction_gain.abs().max(1.0));
    }
    // translations of a compact blob
    for _ in 0..20 {
        let blob = crate::rearrange::CartesianDensity::from_fn([n, n, n], h, |x| {
            let d = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            if d < 3.0 {
                1.0 + 0.3 * x[0].sin()
            } else {
                0.0
            }
        })?;
        let shift = [rng.gen_range(-2..=2), rng.gen_range(-2..=2), rng.gen_range(-2..=2)];
        let t = translate(&blob, shift)?;
        let a = interaction(&blob, &blob, Kernel::Coulomb)?;
        let b = interaction(&t, &t, Kernel::Coulomb)?;
        trans.add(rel(b, a));
        trans.add(if rearrange(&t) == rearrange(&blob) { 0.0 } else { 1.0 });
    }
    Ok(vec![riesz.finish(), equi.finish(), conf.finish(), trans.finish()])
}

fn reduction_suite(cfg: &VerifyConfig) -> Result<Vec<PropertyCheck>> {
    let mut rng = cfg.rng(Suite::Reduction);
    let p = cfg.params;
    let mu = p.mu;
    let grid = make_grid(20.0, 120, Spacing::Log)?;

    let mut stable = Tally::new("k11_constant_across_densities", 1e-3);
    let mut fits = Vec::new();
    let mut recon = Tally::new("reduction_constraints", 1e-6);
    for _ in 0..10 {
        let rho = random_radial_density(grid.clone(), rng.gen_range(0.5..2.0), &mut rng)?;
        let res = global_reduce(&rho, p.j_norm * rng.gen_range(0.5..2.0), mu)?;
        recon.add(res.density_residual);
        recon.add(res.norm_residual);
        fits.push(res.k11_fit);
    }
    let mean = fits.iter().sum::<f64>() / fits.len() as f64;
    for f in &fits {
        stable.add(rel(*f, mean));
    }

    let mut slope = Tally::new("psi_power_slope", 1e-2);
    let rho = random_radial_density(grid.clone(), p.mass, &mut rng)?;
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for s in [0.5, 1.0, 2.0, 4.0, 8.0] {
        let r = rho.scale_values(s)?;
        lx.push(r.psi(mu)?);
        ly.push(global_reduce(&r, p.j_norm, mu)?.ekin_min);
    }
    slope.add((log_log_slope(&lx, &ly) - kinetic_power(mu)).abs());

    let mut comp = Tally::new("competitors_not_better", 1e-9);
    let small = make_grid(20.0, 40, Spacing::Log)?;
    let rho = random_radial_density(small, p.mass, &mut rng)?;
    let res = global_reduce(&rho, p.j_norm, mu)?;
    for _ in 0..100 {
        let c = random_competitor(&res, &rho, 3, &mut rng)?;
        comp.add((res.ekin_min - c.ekin) / res.ekin_min);
        comp.add(rel(c.norm, p.j_norm) - 1e-9);
    }

    let k11 = global_reduce(&random_radial_density(grid, p.mass, &mut rng)?, 1.0, mu)?.k11_fit;
    let fitted = p.with_k11(k11)?;
    let min = minimize_refined(&fitted, cfg.r_max, 2000, &cfg.scf_options())?;
    let lift = lift_minimizer(&min.rho0, &min.potential, min.e0, mu)?;
    let mut lifted = Tally::new("lift_reproduces_rho_m_j", 1e-6);
    lifted.add(lift.density_error);
    lifted.add(rel(lift.mass, p.mass));
    lifted.add(rel(lift.norm, p.j_norm));
    let mut i_eq_r = Tally::new("phase_space_energy_matches_reduced", 1e-4);
    let reduced = energy(&min.rho0, &fitted)?.total;
    i_eq_r.add(rel(lift.ekin + min.energy.potential_term, reduced));
    Ok(vec![
        stable.finish(),
        recon.finish(),
        slope.finish(),
        comp.finish(),
        lifted.finish(),
        i_eq_r.finish(),
    ])
}

/// The minimizer of `cfg` refined on `cfg.grid_n` nodes.
pub fn reference_minimizer(cfg: &VerifyConfig) -> Result<MinimizerResult> {
    minimize_refined(&cfg.params, cfg.r_max, cfg.grid_n, &cfg.scf_options())
}

fn lane_emden_suite(cfg: &VerifyConfig) -> Result<Vec<PropertyCheck>> {
    let p = cfg.params;
    let mut closed = Tally::new("closed_form_zeros", 1e-6);
    closed.add((lane_emden(0.0, LaneEmdenOptions::default())?.xi1.unwrap_or(f64::NAN) - 6f64.sqrt()).abs());
    closed.add((lane_emden(1.0, LaneEmdenOptions::default())?.xi1.unwrap_or(f64::NAN) - std::f64::consts::PI).abs());

    let sol = lane_emden(polytropic_index(p.mu), LaneEmdenOptions::default())?;
    if sol.unbounded() {
        return invalid("polytrope has unbounded support");
    }
    let min = reference_minimizer(cfg)?;
    let cmp = compare_with_polytrope(&min.rho0, min.r_support, &sol, 0.95)?;
    let mut xi = Tally::new("support_radius_matches_xi1", 1e-3);
    xi.add((cmp.xi1_ratio - 1.0).abs());
    let mut profile = Tally::new("profile_matches_polytrope", 1e-3);
    profile.add(cmp.max_rel_error);
    let mut basic = Tally::new("mass_negativity_support", 1e-6);
    basic.add(rel(min.rho0.mass(), p.mass));
    basic.add(if min.energy.total < 0.0 { 0.0 } else { 1.0 });
    basic.add(if min.r_support < min.rho0.grid().r_max() {
        0.0
    } else {
        1.0
    });
    let mut el = Tally::new("euler_lagrange_residual", 1e-5);
    el.add(euler_lagrange_residual(&min.rho0, &p)?);
    let mut wrong = Tally::new("ball_is_not_critical", 0.0);
    let ball = RadialDensity::uniform_ball(min.rho0.grid().clone(), p.mass, 0.5 * min.r_support)?;
    wrong.add((1e-2 - euler_lagrange_residual(&ball, &p)?).max(0.0));
    Ok(vec![
        closed.finish(),
        xi.finish(),
        profile.finish(),
        basic.finish(),
        el.finish(),
        wrong.finish(),
    ])
}

fn sequences_suite(cfg: &VerifyConfig) -> Result<Vec<PropertyCheck>> {
    let mut rng = cfg.rng(Suite::Sequences);
    let p = cfg.params;
    let mu = p.mu;
    let grid = make_grid(200.0, 4000, Spacing::Log)?;
    let rho0 = RadialDensity::from_fn(grid.clone(), |r| (-r * r).exp())?;
    let rho0 = rho0.scale_values(p.mass / rho0.mass())?;

    let mut identity = Tally::new("field_energy_identity", 1e-8);
    for _ in 0..20 {
        let a = random_radial_density(grid.clone(), p.mass, &mut rng)?;
        let fd = field_distance(&a, &rho0)?;
        let e = epot_difference(&a, &rho0)?;
        identity.add(rel(-8.0 * std::f64::consts::PI * e, fd * fd));
        identity.add(e.max(0.0));
    }

    let ns: Vec<usize> = (2..=6).map(|k| 1usize << k).collect();
    let bump = RadialDensity::from_fn(grid.clone(), |r| (-(r - 1.0).powi(2) * 4.0).exp())?;
    // a light bump keeps the mass renormalization in its asymptotic regime
    let bump = bump.scale_values(0.1 * p.mass / bump.mass())?;
    let seq = bump_sequence(&rho0, &bump, &ns)?;
    let rep = sequence_report(&seq, &rho0, 5.0, mu)?;
    let x: Vec<f64> = ns.iter().map(|n| *n as f64).collect();
    let y: Vec<f64> = rep.iter().map(|s| -s.epot_diff).collect();
    let mut rate = Tally::new("bump_sequence_rate", 0.1);
    rate.add((log_log_slope(&x, &y) + 2.0).abs() / 2.0);

    let ns: Vec<usize> = (2..=6).map(|k| 1usize << k).collect();
    let tail = escaping_tail_sequence(&rho0, 2.0, &ns)?;
    let rep = sequence_report(&tail, &rho0, 2.0, mu)?;
    let mut escape = Tally::new("escaping_tail_vanishes", 0.0);
    for w in rep.windows(2) {
        escape.add((w[1].tail_mass - w[0].tail_mass).max(0.0));
        escape.add((w[0].epot_diff - w[1].epot_diff).max(0.0));
    }

    let opts = ScfOptions {
        record_iterates: true,
        ..cfg.scf_options()
    };
    let min = crate::minimizer::minimize(&p, cfg.r_max, 2000, Spacing::Uniform, &opts)?;
    let limit = min.iterates.last().expect("recorded").clone();
    let seq = &min.iterates[..min.iterates.len() - 1];
    let rep = sequence_report(seq, &limit, min.r_support, mu)?;
    let mut scf = Tally::new("scf_iterates_converge", 1e-6);
    let last = rep.last().expect("nonempty");
    scf.add(last.field_dist);
    scf.add(last.lp_dist);
    let burn_in = rep.len() / 4;
    let mut mono = Tally::new("scf_distances_decrease_after_burn_in", 1e-12);
    for w in rep[burn_in..].windows(2) {
        mono.add(w[1].field_dist - w[0].field_dist);
        mono.add(w[1].lp_dist - w[0].lp_dist);
    }

    let mut cutoff = Tally::new("cutoff_energy_bounds", 1e-12);
    for _ in 0..20 {
        let r = random_radial_density(grid.clone(), p.mass, &mut rng)?;
        let c = rng.gen_range(0.05..5.0);
        let v = epot_cutoff(&r, c)?;
        let pair = -2.0 * epot(&r);
        cutoff.add((v - pair) / pair);
        cutoff.add((v - c * p.mass * p.mass) / pair);
    }
    Ok(vec![
        identity.finish(),
        rate.finish(),
        escape.finish(),
        scf.finish(),
        mono.finish(),
        cutoff.finish(),
    ])
}
