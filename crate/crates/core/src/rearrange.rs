//! Densities on small Cartesian grids: symmetric decreasing rearrangement,
//! lattice translations, pair interactions and the confinement splitting.
//!
//! Cell `(i, j, k)` has its center at
//! `origin + h (i - (nx-1)/2, j - (ny-1)/2, k - (nz-1)/2)`, so `origin` is
//! the geometric center of the grid. A cell interacts with itself through
//! the kernel value at distance `h/2`.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, VpError};
use crate::io::{write_atomic, write_json};
use crate::radial::{RadialDensity, RadialGrid, CSV_SCHEMA_VERSION};

pub const MAX_CELLS_PER_AXIS: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct CartesianDensity {
    dims: [usize; 3],
    cell: f64,
    origin: [f64; 3],
    values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CartesianHeader {
    schema_version: u32,
    dims: [usize; 3],
    cell: f64,
    origin: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Coulomb,
    /// `min(1/d, c)`.
    Cutoff(f64),
}

impl Kernel {
    pub fn eval(&self, d: f64) -> f64 {
        match *self {
            Kernel::Coulomb => 1.0 / d,
            Kernel::Cutoff(c) => (1.0 / d).min(c),
        }
    }
}

impl CartesianDensity {
    pub fn new(dims: [usize; 3], cell: f64, values: Vec<f64>) -> Result<Self> {
        Self::with_origin(dims, cell, [0.0; 3], values)
    }

    pub fn with_origin(dims: [usize; 3], cell: f64, origin: [f64; 3], values: Vec<f64>) -> Result<Self> {
        if dims.iter().any(|&d| d == 0 || d > MAX_CELLS_PER_AXIS) {
            return invalid(format!("dims {dims:?} must lie in 1..={MAX_CELLS_PER_AXIS}"));
        }
        if !(cell > 0.0 && cell.is_finite()) {
            return invalid(format!("cell size must be positive, got {cell}"));
        }
        if values.len() != dims[0] * dims[1] * dims[2] {
            return invalid("value count does not match dims");
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(VpError::ConstraintViolation(format!(
                "cell value {v} is not a finite nonnegative number"
            )));
        }
        Ok(Self {
            dims,
            cell,
            origin,
            values,
        })
    }

    pub fn from_fn(dims: [usize; 3], cell: f64, f: impl Fn([f64; 3]) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for i in 0..dims[0] {
            for j in 0..dims[1] {
                for k in 0..dims[2] {
                    values.push(f(center_offset(dims, cell, [i, j, k])));
                }
            }
        }
        Self::new(dims, cell, values)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn cell(&self) -> f64 {
        self.cell
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index(&self, ijk: [usize; 3]) -> usize {
        (ijk[0] * self.dims[1] + ijk[1]) * self.dims[2] + ijk[2]
    }

    pub fn unindex(&self, idx: usize) -> [usize; 3] {
        let k = idx % self.dims[2];
        let j = (idx / self.dims[2]) % self.dims[1];
        [idx / (self.dims[1] * self.dims[2]), j, k]
    }

    /// Cell center relative to the grid center.
    pub fn offset(&self, idx: usize) -> [f64; 3] {
        center_offset(self.dims, self.cell, self.unindex(idx))
    }

    pub fn center_distance(&self, idx: usize) -> f64 {
        norm(self.offset(idx))
    }

    pub fn mass(&self) -> f64 {
        self.cell.powi(3) * self.values.iter().sum::<f64>()
    }

    /// `(h³ Σ ρ^p)^{1/p}`.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return invalid(format!("L^p norm needs p ≥ 1, got {p}"));
        }
        let s: f64 = self.values.iter().map(|v| v.powf(p)).sum();
        Ok((self.cell.powi(3) * s).powf(1.0 / p))
    }

    pub fn same_geometry(&self, other: &CartesianDensity) -> bool {
        self.dims == other.dims && self.cell == other.cell && self.origin == other.origin
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# schema_version={CSV_SCHEMA_VERSION}")?;
        writeln!(out, "ix,iy,iz,value")?;
        for (idx, v) in self.values.iter().enumerate() {
            let [i, j, k] = self.unindex(idx);
            writeln!(out, "{i},{j},{k},{v:.16e}")?;
        }
        Ok(())
    }

    /// Writes `<stem>.csv` and the `<stem>.json` header into `dir`.
    pub fn write_files(&self, dir: &Path, stem: &str) -> Result<()> {
        let mut csv = Vec::new();
        self.write_csv(&mut csv)?;
        write_atomic(&dir.join(format!("{stem}.csv")), &csv)?;
        write_json(
            &dir.join(format!("{stem}.json")),
            &CartesianHeader {
                schema_version: CSV_SCHEMA_VERSION,
                dims: self.dims,
                cell: self.cell,
                origin: self.origin,
            },
        )
    }

    pub fn read_files(dir: &Path, stem: &str) -> Result<Self> {
        let header: CartesianHeader = serde_json::from_slice(&fs::read(dir.join(format!("{stem}.json")))?)?;
        let n = header.dims.iter().product();
        let mut values = vec![f64::NAN; n];
        let file = fs::File::open(dir.join(format!("{stem}.csv")))?;
        let bad = |line: &str| VpError::InvalidArgument(format!("malformed cell line: {line}"));
        for line in BufReader::new(file).lines() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') || t.starts_with("ix") {
                continue;
            }
            let f: Vec<&str> = t.split(',').collect();
            if f.len() != 4 {
                return Err(bad(t));
            }
            let ijk: Vec<usize> = f[..3]
                .iter()
                .map(|s| s.trim().parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad(t))?;
            if ijk[0] >= header.dims[0] || ijk[1] >= header.dims[1] || ijk[2] >= header.dims[2] {
                return Err(bad(t));
            }
            let v: f64 = f[3].trim().parse().map_err(|_| bad(t))?;
            values[(ijk[0] * header.dims[1] + ijk[1]) * header.dims[2] + ijk[2]] = v;
        }
        if values.iter().any(|v| v.is_nan()) {
            return invalid("cell file does not cover the grid");
        }
        Self::with_origin(header.dims, header.cell, header.origin, values)
    }
}

fn center_offset(dims: [usize; 3], h: f64, ijk: [usize; 3]) -> [f64; 3] {
    let c = |a: usize| h * (ijk[a] as f64 - (dims[a] as f64 - 1.0) / 2.0);
    [c(0), c(1), c(2)]
}

fn norm(x: [f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

/// Cell indices sorted by distance from the grid center, ties by index.
fn distance_order(rho: &CartesianDensity) -> Vec<usize> {
    let d: Vec<f64> = (0..rho.len()).map(|i| rho.center_distance(i)).collect();
    let mut order: Vec<usize> = (0..rho.len()).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    order
}

/// Largest values onto the cells closest to the grid center.
pub fn rearrange(rho: &CartesianDensity) -> CartesianDensity {
    let mut sorted = rho.values.clone();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    let mut values = vec![0.0; rho.len()];
    for (v, idx) in sorted.into_iter().zip(distance_order(rho)) {
        values[idx] = v;
    }
    CartesianDensity { values, ..rho.clone() }
}

/// Moves every value by `shift` cells. Fails instead of dropping mass.
pub fn translate(rho: &CartesianDensity, shift: [i64; 3]) -> Result<CartesianDensity> {
    let mut values = vec![0.0; rho.len()];
    let dims = rho.dims.map(|d| d as i64);
    for (idx, &v) in rho.values.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let ijk = rho.unindex(idx);
        let mut to = [0usize; 3];
        for a in 0..3 {
            let t = ijk[a] as i64 + shift[a];
            if t < 0 || t >= dims[a] {
                return invalid(format!("shift {shift:?} moves mass off the grid"));
            }
            to[a] = t as usize;
        }
        values[rho.index(to)] = v;
    }
    Ok(CartesianDensity { values, ..rho.clone() })
}

/// Kernel values for every lattice offset `(di, dj, dk)`, the zero offset
/// taking distance `h/2`.
struct OffsetTable {
    span: [usize; 3],
    values: Vec<f64>,
}

impl OffsetTable {
    fn new(dims: [usize; 3], h: f64, f: impl Fn(f64) -> f64) -> Self {
        let span = dims.map(|d| 2 * d - 1);
        let mut values = Vec::with_capacity(span[0] * span[1] * span[2]);
        for a in 0..span[0] {
            for b in 0..span[1] {
                for c in 0..span[2] {
                    let d = [
                        a as f64 - (dims[0] - 1) as f64,
                        b as f64 - (dims[1] - 1) as f64,
                        c as f64 - (dims[2] - 1) as f64,
                    ];
                    let dist = if d == [0.0; 3] { 0.5 * h } else { h * norm(d) };
                    values.push(f(dist));
                }
            }
        }
        Self { span, values }
    }

    /// `h⁶ Σ_ij a_i b_j table(j - i)`.
    fn pair_sum(&self, a: &CartesianDensity, b: &CartesianDensity) -> f64 {
        let [nx, ny, nz] = a.dims;
        let [_, sy, sz] = self.span;
        let mut total = 0.0;
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    let va = a.values[(i * ny + j) * nz + k];
                    if va == 0.0 {
                        continue;
                    }
                    let mut acc = 0.0;
                    for i2 in 0..nx {
                        let oa = i2 + nx - 1 - i;
                        for j2 in 0..ny {
                            let ob = j2 + ny - 1 - j;
                            let row_b = &b.values[(i2 * ny + j2) * nz..(i2 * ny + j2 + 1) * nz];
                            let base = (oa * sy + ob) * sz + nz - 1 - k;
                            let row_t = &self.values[base..base + nz];
                            for (x, y) in row_b.iter().zip(row_t) {
                                acc += x * y;
                            }
                        }
                    }
                    total += va * acc;
                }
            }
        }
        total * a.cell.powi(6)
    }
}

fn check_geometry(a: &CartesianDensity, b: &CartesianDensity) -> Result<()> {
    if !a.same_geometry(b) {
        return invalid("densities live on different grids");
    }
    Ok(())
}

/// `∬ a(x) b(y) k(|x - y|) dx dy` as a direct sum over cell pairs.
pub fn interaction(a: &CartesianDensity, b: &CartesianDensity, kernel: Kernel) -> Result<f64> {
    check_geometry(a, b)?;
    if let Kernel::Cutoff(c) = kernel {
        if !(c > 0.0) {
            return invalid(format!("cutoff must be positive, got {c}"));
        }
    }
    Ok(OffsetTable::new(a.dims, a.cell, |d| kernel.eval(d)).pair_sum(a, b))
}

/// `E_pot = -(1/2) ∬ ρρ / |x - y|` on the grid.
pub fn epot_grid(rho: &CartesianDensity) -> f64 {
    -0.5 * interaction(rho, rho, Kernel::Coulomb).expect("same geometry")
}

/// Terms of the confinement splitting for `ρ` and its rearrangement `ρ*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Confinement {
    /// `[1/(2r0) - 1/R] ∬_{|x-y| ≥ R} ρρ`.
    pub a: f64,
    /// `∬ ρ*ρ* / |x-y|` over `(|x| ≥ r0 ∨ |y| ≥ r0) ∧ |x-y| ≥ 2r0`.
    pub b: f64,
    /// `(1/(2r0)) ∬ ρ*ρ*` over the same region.
    pub c: f64,
    /// `∬ ρ*ρ*/|x-y| - ∬ ρρ/|x-y|`, which dominates `a + b - c`.
    pub interaction_gain: f64,
}

impl Confinement {
    /// `a + b - c - interaction_gain`, positive when the bound fails.
    pub fn violation(&self) -> f64 {
        self.a + self.b - self.c - self.interaction_gain
    }
}

pub fn confinement_decomposition(rho: &CartesianDensity, r0: f64, r_big: f64) -> Result<Confinement> {
    if !(r0 > 0.0) || !(r_big > 2.0 * r0) {
        return invalid(format!("need r0 > 0 and R > 2 r0, got r0 = {r0}, R = {r_big}"));
    }
    let star = rearrange(rho);
    let h = rho.cell;
    let dims = rho.dims;
    let far = OffsetTable::new(dims, h, |d| if d >= r_big { 1.0 } else { 0.0 });
    let a = (1.0 / (2.0 * r0) - 1.0 / r_big) * far.pair_sum(rho, rho);

    // B and C need |x|, |y| as well as |x - y|: plain double loop
    let n = star.len();
    let offs: Vec<[f64; 3]> = (0..n).map(|i| star.offset(i)).collect();
    let radii: Vec<f64> = offs.iter().map(|o| norm(*o)).collect();
    let (mut b, mut c) = (0.0, 0.0);
    for i in 0..n {
        let vi = star.values[i];
        if vi == 0.0 {
            continue;
        }
        for j in 0..n {
            let vj = star.values[j];
            if vj == 0.0 {
                continue;
            }
            let d = if i == j {
                0.5 * h
            } else {
                norm([
                    offs[i][0] - offs[j][0],
                    offs[i][1] - offs[j][1],
                    offs[i][2] - offs[j][2],
                ])
            };
            if (radii[i] >= r0 || radii[j] >= r0) && d >= 2.0 * r0 {
                b += vi * vj / d;
                c += vi * vj;
            }
        }
    }
    let h6 = h.powi(6);
    let gain = interaction(&star, &star, Kernel::Coulomb)? - interaction(rho, rho, Kernel::Coulomb)?;
    Ok(Confinement {
        a,
        b: b * h6,
        c: c * h6 / (2.0 * r0),
        interaction_gain: gain,
    })
}

/// Radial profile of a grid density: cells are binned by center distance
/// in shells of width `h/2`; each nonempty bin becomes a node at the mean
/// distance (at least `h/2`) carrying the mean cell value and volume weight
/// `count · h³ / 4π`, so the mass is preserved.
pub fn radial_project(rho: &CartesianDensity) -> Result<RadialDensity> {
    let h = rho.cell;
    let width = 0.5 * h;
    let mut bins: std::collections::BTreeMap<u64, (usize, f64, f64)> = Default::default();
    for idx in 0..rho.len() {
        let d = rho.center_distance(idx);
        let e = bins.entry((d / width).floor() as u64).or_insert((0, 0.0, 0.0));
        e.0 += 1;
        e.1 += d;
        e.2 += rho.values[idx];
    }
    let mut nodes = Vec::with_capacity(bins.len());
    let mut weights = Vec::with_capacity(bins.len());
    let mut values = Vec::with_capacity(bins.len());
    for (count, dsum, vsum) in bins.into_values() {
        let r = (dsum / count as f64).max(0.5 * h);
        nodes.push(r);
        weights.push(count as f64 * h.powi(3) / (4.0 * PI));
        values.push(vsum / count as f64);
    }
    let grid = Arc::new(RadialGrid::from_parts(nodes, weights)?);
    RadialDensity::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_cell_rearrangement() {
        // a 1x1x3 line: the middle cell is closest to the center
        let rho = CartesianDensity::new([1, 1, 3], 1.0, vec![2.0, 0.0, 1.0]).unwrap();
        let star = rearrange(&rho);
        assert_eq!(star.values(), &[1.0, 2.0, 0.0]);
        assert_eq!(rearrange(&star), star);
    }

    #[test]
    fn rearrangement_keeps_values() {
        let rho = CartesianDensity::from_fn([5, 4, 3], 0.5, |x| (x[0] + 2.0 * x[1] - x[2]).abs()).unwrap();
        let star = rearrange(&rho);
        let mut a = rho.values().to_vec();
        let mut b = star.values().to_vec();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert_eq!(a, b);
    }

    #[test]
    fn two_cell_interaction() {
        let mut v = vec![0.0; 5];
        v[0] = 1.0;
        v[4] = 1.0;
        let rho = CartesianDensity::new([1, 1, 5], 1.0, v).unwrap();
        let e = interaction(&rho, &rho, Kernel::Coulomb).unwrap();
        // two self pairs at h/2 plus two cross pairs at distance 4
        assert!((e - (2.0 * 2.0 + 2.0 / 4.0)).abs() < 1e-15);
        let c = interaction(&rho, &rho, Kernel::Cutoff(0.1)).unwrap();
        assert!((c - 0.4).abs() < 1e-15);
    }

    #[test]
    fn translation_round_trip() {
        let rho = CartesianDensity::from_fn([6, 6, 6], 1.0, |x| if norm(x) < 1.0 { 1.0 } else { 0.0 }).unwrap();
        let t = translate(&rho, [1, -1, 2]).unwrap();
        assert_eq!(translate(&t, [-1, 1, -2]).unwrap(), rho);
        assert_eq!(translate(&rho, [0, 0, 0]).unwrap(), rho);
        assert!(translate(&rho, [4, 0, 0]).is_err());
        let e0 = interaction(&rho, &rho, Kernel::Coulomb).unwrap();
        let e1 = interaction(&t, &t, Kernel::Coulomb).unwrap();
        assert!((e0 - e1).abs() <= 1e-14 * e0);
        assert_eq!(rearrange(&t), rearrange(&rho));
    }

    #[test]
    fn confinement_inside_small_ball() {
        let rho = CartesianDensity::from_fn([8, 8, 8], 1.0, |x| if norm(x) < 1.0 { 1.0 } else { 0.0 }).unwrap();
        let c = confinement_decomposition(&rho, 3.0, 7.0).unwrap();
        assert_eq!((c.a, c.b, c.c), (0.0, 0.0, 0.0));
        assert!(confinement_decomposition(&rho, 3.0, 6.0).is_err());
    }

    #[test]
    fn projection_keeps_mass_and_monotonicity() {
        let rho = CartesianDensity::from_fn([9, 9, 9], 0.3, |x| (-norm(x)).exp()).unwrap();
        let p = radial_project(&rho).unwrap();
        assert!((p.mass() - rho.mass()).abs() <= 1e-12 * rho.mass());
        assert!(p.values().windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn files_round_trip() {
        let dir = std::env::temp_dir().join(format!("vpmin-cart-{}", std::process::id()));
        let rho = CartesianDensity::from_fn([3, 4, 5], 0.7, |x| x[0].abs() + 0.1).unwrap();
        rho.write_files(&dir, "grid").unwrap();
        assert_eq!(CartesianDensity::read_files(&dir, "grid").unwrap(), rho);
        fs::remove_dir_all(dir).unwrap();
    }
}
