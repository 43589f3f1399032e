//! `vpmin`: minimizers of the reduced gravitational energy and checks of
//! the structure around them.

mod config;
mod report;

use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use vpmin::io::write_json;
use vpmin::kinetic::{global_reduce, k11_oracle, lift_minimizer, LiftDiagnostics};
use vpmin::minimizer::{minimize, MinimizerSummary, ScfOptions};
use vpmin::radial::CSV_SCHEMA_VERSION;
use vpmin::rearrange::{
    confinement_decomposition, epot_grid, interaction, radial_project, rearrange, Confinement, Kernel,
};
use vpmin::reduced::functional;
use vpmin::sampling::random_cartesian;
use vpmin::verify::{run_suite, ScfSettings, Suite, SuiteReport, VerifyConfig};
use vpmin::{epot, VpError};

use config::{Flags, RunConfig, K11};

const EXIT_VIOLATED: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 2;
const EXIT_INVALID: u8 = 3;

#[derive(Parser)]
#[command(
    name = "vpmin",
    version,
    about = "Polytropic minimizers of the reduced Vlasov-Poisson energy"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the minimizer; writes profile.csv and result.json.
    Minimize,
    /// Run a property suite; writes verify_<suite>.json.
    Verify {
        /// scaling, concentration, riesz, reduction, lane-emden, sequences or all
        suite: String,
    },
    /// Consolidate earlier artifacts in the output directory into report.json.
    Report,
    /// Rearrangement demo on a random Cartesian grid.
    Rearrange {
        /// Cells per axis.
        #[arg(long, default_value_t = 12)]
        cells: usize,
    },
    /// Reduce the minimizer to phase space and back.
    ReduceCheck,
}

/// Error carrying the exit code it should produce.
struct Failure {
    code: u8,
    message: String,
}

impl From<VpError> for Failure {
    fn from(e: VpError) -> Self {
        let code = match e {
            VpError::NotConverged(_) | VpError::NumericFailure(_) | VpError::GridTooSmall { .. } => EXIT_NOT_CONVERGED,
            _ => EXIT_INVALID,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INVALID,
        message: message.into(),
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cfg = match config::resolve(&cli.flags) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_INVALID);
        }
    };
    let res = match cli.command {
        Command::Minimize => cmd_minimize(&cfg),
        Command::Verify { suite } => cmd_verify(&cfg, &suite),
        Command::Report => report::cmd_report(&cfg.out_dir),
        Command::Rearrange { cells } => cmd_rearrange(&cfg, cells),
        Command::ReduceCheck => cmd_reduce_check(&cfg),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn scf_options(cfg: &RunConfig) -> ScfOptions {
    ScfOptions {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        damping: cfg.damping,
        ..Default::default()
    }
}

fn k11_source(cfg: &RunConfig) -> &'static str {
    match cfg.k11 {
        K11::Value(_) => "input",
        K11::Oracle => "oracle",
    }
}

#[derive(Serialize)]
struct RunResult {
    #[serde(flatten)]
    summary: MinimizerSummary,
    k11_source: &'static str,
    spacing: &'static str,
}

fn spacing_name(cfg: &RunConfig) -> &'static str {
    match cfg.spacing {
        vpmin::Spacing::Uniform => "uniform",
        vpmin::Spacing::Log => "log",
        vpmin::Spacing::Custom => "custom",
    }
}

fn cmd_minimize(cfg: &RunConfig) -> CmdResult {
    let params = cfg.params(k11_oracle)?;
    let res = minimize(&params, cfg.r_max, cfg.grid_n, cfg.spacing, &scf_options(cfg))?;
    res.write_outputs(&cfg.out_dir)?;
    // result.json also records where K11 came from
    let out = RunResult {
        summary: res.summary()?,
        k11_source: k11_source(cfg),
        spacing: spacing_name(cfg),
    };
    write_json(&cfg.out_dir.join("result.json"), &out)?;
    println!(
        "energy {:.12e}  support {:.6}  iterations {}  residual {:.2e}",
        out.summary.energy.total, out.summary.r_support, out.summary.iterations, out.summary.residual
    );
    Ok(0)
}

#[derive(Serialize)]
struct AllReport<'a> {
    schema_version: u32,
    suite: &'static str,
    seed: u64,
    mu: f64,
    passed: bool,
    suites: &'a [SuiteReport],
}

fn cmd_verify(cfg: &RunConfig, suite: &str) -> CmdResult {
    let suites: Vec<Suite> = if suite == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![suite.parse::<Suite>()?]
    };
    let params = cfg.params(k11_oracle)?;
    let mut vcfg = VerifyConfig::new(params, cfg.seed);
    if cfg.grid_n_set {
        vcfg.grid_n = cfg.grid_n;
    }
    vcfg.r_max = cfg.r_max;
    vcfg.scf = ScfSettings {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        damping: cfg.damping,
    };
    let mut reports = Vec::new();
    for s in suites {
        let rep = run_suite(s, &vcfg)?;
        for p in &rep.properties {
            println!(
                "{} {s}/{}: {} samples, {} violations, max {:.3e} (tol {:.1e})",
                if p.passed { "PASS" } else { "FAIL" },
                p.name,
                p.count,
                p.violations,
                p.max_violation,
                p.tolerance
            );
        }
        write_json(&cfg.out_dir.join(format!("verify_{s}.json")), &rep)?;
        reports.push(rep);
    }
    let passed = reports.iter().all(|r| r.passed);
    if suite == "all" {
        let all = AllReport {
            schema_version: CSV_SCHEMA_VERSION,
            suite: "all",
            seed: cfg.seed,
            mu: cfg.mu,
            passed,
            suites: &reports,
        };
        write_json(&cfg.out_dir.join("verify_all.json"), &all)?;
    }
    Ok(if passed { 0 } else { EXIT_VIOLATED })
}

#[derive(Serialize)]
struct RearrangeReport {
    schema_version: u32,
    seed: u64,
    cells: usize,
    mass: f64,
    coulomb_before: f64,
    coulomb_after: f64,
    epot_before: f64,
    epot_after: f64,
    /// `E_pot` of the rearranged grid projected onto radial shells.
    epot_radial: f64,
    confinement: Confinement,
    riesz_holds: bool,
}

fn cmd_rearrange(cfg: &RunConfig, cells: usize) -> CmdResult {
    if !(2..=vpmin::rearrange::MAX_CELLS_PER_AXIS).contains(&cells) {
        return Err(invalid(format!(
            "cells must lie in 2..={}",
            vpmin::rearrange::MAX_CELLS_PER_AXIS
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let rho = random_cartesian(cells, 1.0, &mut rng)?;
    let star = rearrange(&rho);
    let before = interaction(&rho, &rho, Kernel::Coulomb)?;
    let after = interaction(&star, &star, Kernel::Coulomb)?;
    let r0 = cells as f64 / 6.0;
    let rep = RearrangeReport {
        schema_version: CSV_SCHEMA_VERSION,
        seed: cfg.seed,
        cells,
        mass: rho.mass(),
        coulomb_before: before,
        coulomb_after: after,
        epot_before: epot_grid(&rho),
        epot_after: epot_grid(&star),
        epot_radial: epot(&radial_project(&star)?),
        confinement: confinement_decomposition(&rho, r0, 2.5 * r0)?,
        riesz_holds: after >= before - 1e-12 * before.abs(),
    };
    rho.write_files(&cfg.out_dir, "rearrange_rho")?;
    star.write_files(&cfg.out_dir, "rearrange_rho_star")?;
    write_json(&cfg.out_dir.join("rearrange.json"), &rep)?;
    println!(
        "coulomb interaction {:.6e} -> {:.6e} ({})",
        before,
        after,
        if rep.riesz_holds { "increased" } else { "DECREASED" }
    );
    Ok(if rep.riesz_holds && rep.confinement.violation() <= 1e-10 {
        0
    } else {
        EXIT_VIOLATED
    })
}

#[derive(Serialize)]
struct ReduceCheck {
    schema_version: u32,
    mu: f64,
    j_norm: f64,
    k11_used: f64,
    k11_source: &'static str,
    k11_oracle: f64,
    k11_fit_on_minimizer: f64,
    /// `K Ψ^{(2mu+3)/3}` of the minimizer.
    kinetic_reduced: f64,
    /// Phase-space kinetic energy of the global reduction.
    kinetic_phase_space: f64,
    lift: LiftDiagnostics,
    passed: bool,
}

fn cmd_reduce_check(cfg: &RunConfig) -> CmdResult {
    let params = cfg.params(k11_oracle)?;
    let oracle = k11_oracle(cfg.mu)?;
    let min = minimize(&params, cfg.r_max, cfg.grid_n, cfg.spacing, &scf_options(cfg))?;
    let red = global_reduce(&min.rho0, params.j_norm, params.mu)?;
    let lift = lift_minimizer(&min.rho0, &min.potential, min.e0, params.mu)?;
    // with K11 equal to the fitted value both kinetic energies coincide
    let kinetic_reduced = functional(
        &min.rho0,
        params.mu,
        red.k11_fit * params.j_norm.powf(-vpmin::params::j_exponent(params.mu)),
    )?
    .kinetic_term;
    let fit_ok = (red.k11_fit / oracle - 1.0).abs() <= 1e-3;
    let lift_ok = lift.density_error <= 1e-6
        && (lift.mass / params.mass - 1.0).abs() <= 1e-6
        && (lift.norm / params.j_norm - 1.0).abs() <= 1e-6;
    let out = ReduceCheck {
        schema_version: CSV_SCHEMA_VERSION,
        mu: params.mu,
        j_norm: params.j_norm,
        k11_used: params.k11,
        k11_source: k11_source(cfg),
        k11_oracle: oracle,
        k11_fit_on_minimizer: red.k11_fit,
        kinetic_reduced,
        kinetic_phase_space: red.ekin_min,
        lift,
        passed: fit_ok && lift_ok,
    };
    write_json(&cfg.out_dir.join("reduce_check.json"), &out)?;
    println!(
        "K11 oracle {:.10}  fit on minimizer {:.10}  lift density error {:.2e}",
        oracle, red.k11_fit, out.lift.density_error
    );
    Ok(if out.passed { 0 } else { EXIT_VIOLATED })
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    if dir.is_dir() {
        Ok(())
    } else {
        Err(invalid(format!("output directory {} does not exist", dir.display())))
    }
}
