//! Run configuration: defaults, then a `key = value` file, then flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use vpmin::{ModelParams, Spacing};

/// Flags shared by every subcommand. Unset flags fall back to the config
/// file, then to the defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Phase-space exponent, 0 < mu < 7/2.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    /// Total mass M.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub mass: Option<f64>,
    /// Phase-space norm J.
    #[arg(long = "j", global = true, allow_negative_numbers = true)]
    pub j_norm: Option<f64>,
    /// Kinetic constant K11, a number or `oracle`.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub k11: Option<String>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub grid_n: Option<usize>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub r_max: Option<f64>,
    /// `uniform` or `log`.
    #[arg(long, global = true)]
    pub spacing: Option<String>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub max_iter: Option<usize>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub damping: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, env = "VPMIN_OUT")]
    pub out_dir: Option<PathBuf>,
    /// Flat `key = value` file; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum K11 {
    Value(f64),
    Oracle,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mu: f64,
    pub mass: f64,
    pub j_norm: f64,
    pub k11: K11,
    pub grid_n: usize,
    /// Whether the grid size was set explicitly rather than defaulted.
    pub grid_n_set: bool,
    pub r_max: f64,
    pub spacing: Spacing,
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl RunConfig {
    /// Parameters with a numeric K11; `oracle_k11` is consulted only when
    /// the config asks for it.
    pub fn params(&self, oracle_k11: impl FnOnce(f64) -> vpmin::Result<f64>) -> vpmin::Result<ModelParams> {
        let k11 = match self.k11 {
            K11::Value(v) => v,
            K11::Oracle => oracle_k11(self.mu)?,
        };
        ModelParams::new(self.mu, self.mass, self.j_norm, k11)
    }
}

fn parse_file(path: &Path) -> Result<BTreeMap<String, String>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut out = BTreeMap::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("{}:{}: expected `key = value`", path.display(), k + 1));
        };
        out.insert(key.trim().replace('_', "-"), value.trim().to_string());
    }
    Ok(out)
}

fn number<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T, String> {
    raw.parse().map_err(|_| format!("invalid value for {key}: '{raw}'"))
}

fn parse_k11(raw: &str) -> Result<K11, String> {
    if raw.eq_ignore_ascii_case("oracle") {
        Ok(K11::Oracle)
    } else {
        number("k11", raw).map(K11::Value)
    }
}

fn parse_spacing(raw: &str) -> Result<Spacing, String> {
    match raw.to_ascii_lowercase().as_str() {
        "uniform" => Ok(Spacing::Uniform),
        "log" => Ok(Spacing::Log),
        _ => Err(format!("invalid spacing '{raw}' (uniform or log)")),
    }
}

pub fn resolve(flags: &Flags) -> Result<RunConfig, String> {
    let mut file = match &flags.config {
        Some(p) => parse_file(p)?,
        None => BTreeMap::new(),
    };
    const KNOWN: [&str; 12] = [
        "mu", "mass", "j", "k11", "grid-n", "r-max", "spacing", "tol", "max-iter", "damping", "seed", "out-dir",
    ];
    if let Some(k) = file.keys().find(|k| !KNOWN.contains(&k.as_str())) {
        return Err(format!("unknown config key '{k}'"));
    }
    let mut take = |key: &str| file.remove(key);

    macro_rules! pick {
        ($flag:expr, $key:literal, $default:expr) => {
            match ($flag, take($key)) {
                (Some(v), _) => v,
                (None, Some(raw)) => number($key, &raw)?,
                (None, None) => $default,
            }
        };
    }

    let mu = pick!(flags.mu, "mu", 1.5);
    let mass = pick!(flags.mass, "mass", 1.0);
    let j_norm = pick!(flags.j_norm, "j", 1.0);
    let k11 = match (&flags.k11, take("k11")) {
        (Some(v), _) => parse_k11(v)?,
        (None, Some(raw)) => parse_k11(&raw)?,
        (None, None) => K11::Value(1.0),
    };
    let grid_file = take("grid-n");
    let grid_n_set = flags.grid_n.is_some() || grid_file.is_some();
    let grid_n = match (flags.grid_n, grid_file) {
        (Some(v), _) => v,
        (None, Some(raw)) => number("grid-n", &raw)?,
        (None, None) => 2000,
    };
    let r_max = pick!(flags.r_max, "r-max", 20.0);
    let spacing = match (&flags.spacing, take("spacing")) {
        (Some(v), _) => parse_spacing(v)?,
        (None, Some(raw)) => parse_spacing(&raw)?,
        (None, None) => Spacing::Uniform,
    };
    let tol = pick!(flags.tol, "tol", 1e-9);
    let max_iter = pick!(flags.max_iter, "max-iter", 5000);
    let damping = pick!(flags.damping, "damping", 0.5);
    let seed = pick!(flags.seed, "seed", 0);
    let out_dir = match (&flags.out_dir, take("out-dir")) {
        (Some(v), _) => v.clone(),
        (None, Some(raw)) => PathBuf::from(raw),
        (None, None) => PathBuf::from("vpmin-out"),
    };

    if grid_n < 16 {
        return Err(format!("grid-n must be at least 16, got {grid_n}"));
    }
    if !(r_max > 0.0 && r_max.is_finite()) {
        return Err(format!("r-max must be positive, got {r_max}"));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(format!("tol must be positive, got {tol}"));
    }
    if max_iter == 0 {
        return Err("max-iter must be positive".into());
    }
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(format!("damping must lie in (0, 1], got {damping}"));
    }
    if let K11::Value(v) = k11 {
        ModelParams::new(mu, mass, j_norm, v).map_err(|e| e.to_string())?;
    } else {
        ModelParams::new(mu, mass, j_norm, 1.0).map_err(|e| e.to_string())?;
    }
    Ok(RunConfig {
        mu,
        mass,
        j_norm,
        k11,
        grid_n,
        grid_n_set,
        r_max,
        spacing,
        tol,
        max_iter,
        damping,
        seed,
        out_dir,
    })
}
