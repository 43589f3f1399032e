//! `report`: consolidates earlier artifacts. Everything except
//! `generated_at` is a function of the files read.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use vpmin::io::write_json;
use vpmin::lane_emden::{compare_profile, lane_emden, LaneEmdenOptions, PolytropeComparison};
use vpmin::minimizer::MinimizerSummary;
use vpmin::params::polytropic_index;
use vpmin::radial::CSV_SCHEMA_VERSION;
use vpmin::verify::SuiteReport;

use crate::{ensure_dir, invalid, CmdResult, Failure};

#[derive(Deserialize, Serialize)]
struct StoredResult {
    #[serde(flatten)]
    summary: MinimizerSummary,
    #[serde(default)]
    k11_source: Option<String>,
}

#[derive(Serialize)]
struct Polytrope {
    index_n: f64,
    xi1: f64,
    comparison: PolytropeComparison,
}

#[derive(Serialize)]
struct Margin {
    suite: String,
    property: String,
    passed: bool,
    count: usize,
    max_violation: f64,
    tolerance: f64,
}

#[derive(Serialize)]
struct Report {
    schema_version: u32,
    generated_at: u64,
    minimizer: Option<StoredResult>,
    polytrope: Option<Polytrope>,
    suites: Vec<SuiteSummary>,
    margins: Vec<Margin>,
    all_passed: bool,
}

#[derive(Serialize)]
struct SuiteSummary {
    suite: String,
    passed: bool,
    seed: u64,
    mu: f64,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("malformed {}: {e}", path.display())))
}

/// `(r, rho)` columns of `profile.csv`.
fn read_profile(path: &Path) -> Result<(Vec<f64>, Vec<f64>), Failure> {
    let text = fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    let mut r = Vec::new();
    let mut rho = Vec::new();
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let mut cols = line.split(',');
        let mut next = || -> Result<f64, Failure> {
            cols.next()
                .and_then(|c| c.trim().parse().ok())
                .ok_or_else(|| invalid(format!("malformed row in {}: '{line}'", path.display())))
        };
        r.push(next()?);
        rho.push(next()?);
    }
    Ok((r, rho))
}

fn polytrope(summary: &MinimizerSummary, dir: &Path) -> Result<Option<Polytrope>, Failure> {
    let profile = dir.join("profile.csv");
    if !profile.is_file() {
        return Ok(None);
    }
    let sol = lane_emden(polytropic_index(summary.mu), LaneEmdenOptions::default())?;
    let Some(xi1) = sol.xi1 else {
        return Ok(None);
    };
    let (r, rho) = read_profile(&profile)?;
    let comparison = compare_profile(&r, &rho, summary.mass, summary.r_support, &sol, 0.95)?;
    Ok(Some(Polytrope {
        index_n: sol.index_n,
        xi1,
        comparison,
    }))
}

pub fn cmd_report(dir: &Path) -> CmdResult {
    ensure_dir(dir)?;
    let minimizer = {
        let p = dir.join("result.json");
        if p.is_file() {
            Some(read_json::<StoredResult>(&p)?)
        } else {
            None
        }
    };
    let mut names: Vec<String> = fs::read_dir(dir)
        .map_err(|e| invalid(format!("cannot list {}: {e}", dir.display())))?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("verify_") && n.ends_with(".json") && n != "verify_all.json")
        .collect();
    names.sort();
    let suites: Vec<SuiteReport> = names
        .iter()
        .map(|n| read_json(&dir.join(n)))
        .collect::<Result<_, _>>()?;
    if minimizer.is_none() && suites.is_empty() {
        return Err(invalid(format!("no result.json or verify_*.json in {}", dir.display())));
    }
    let polytrope = match &minimizer {
        Some(m) => polytrope(&m.summary, dir)?,
        None => None,
    };
    let margins = suites
        .iter()
        .flat_map(|s| {
            s.properties.iter().map(|p| Margin {
                suite: s.suite.clone(),
                property: p.name.clone(),
                passed: p.passed,
                count: p.count,
                max_violation: p.max_violation,
                tolerance: p.tolerance,
            })
        })
        .collect();
    let all_passed = suites.iter().all(|s| s.passed);
    let report = Report {
        schema_version: CSV_SCHEMA_VERSION,
        generated_at: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        minimizer,
        polytrope,
        suites: suites
            .iter()
            .map(|s| SuiteSummary {
                suite: s.suite.clone(),
                passed: s.passed,
                seed: s.seed,
                mu: s.mu,
            })
            .collect(),
        margins,
        all_passed,
    };
    write_json(&dir.join("report.json"), &report)?;
    for s in &report.suites {
        println!("{} {}", if s.passed { "PASS" } else { "FAIL" }, s.suite);
    }
    if let Some(p) = &report.polytrope {
        println!(
            "polytrope n = {}: support ratio {:.8}, profile error {:.2e}",
            p.index_n, p.comparison.xi1_ratio, p.comparison.max_rel_error
        );
    }
    Ok(0)
}
