//! Bracketed scalar root finding.

use crate::error::{Result, VpError};

/// Stopping rule shared by the root finders.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_iter: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-12,
            rel: 1e-14,
            max_iter: 200,
        }
    }
}

impl Tolerance {
    fn width_ok(&self, a: f64, b: f64) -> bool {
        (b - a).abs() <= self.abs.max(self.rel * a.abs().max(b.abs()))
    }
}

/// Plain bisection on `[lo, hi]`. `f(lo)` and `f(hi)` must have opposite
/// signs (or one of them vanishes).
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, tol: Tolerance) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return Err(VpError::NumericFailure(format!(
            "bisection not bracketed: f({lo:e}) = {flo:e}, f({hi:e}) = {fhi:e}"
        )));
    }
    for _ in 0..tol.max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || tol.width_ok(lo, hi) {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Brent's method: inverse quadratic / secant steps safeguarded by
/// bisection, so the bracket always shrinks.
pub fn brent<F>(mut f: F, lo: f64, hi: f64, tol: Tolerance) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(VpError::NumericFailure(format!(
            "root not bracketed: f({a:e}) = {fa:e}, f({b:e}) = {fb:e}"
        )));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..tol.max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 0.5 * tol.abs.max(tol.rel * b.abs()) + 2.0 * f64::EPSILON * b.abs();
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    Err(VpError::NumericFailure(format!(
        "brent did not converge in {} iterations",
        tol.max_iter
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, Tolerance::default()).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn brent_matches_bisect() {
        let f = |x: f64| x.powf(2.5) - 3.0;
        let a = bisect(f, 0.0, 10.0, Tolerance::default()).unwrap();
        let b = brent(f, 0.0, 10.0, Tolerance::default()).unwrap();
        assert!((a - b).abs() < 1e-11);
    }

    #[test]
    fn unbracketed_is_an_error() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, Tolerance::default()).is_err());
        assert!(brent(|x| x * x + 1.0, -1.0, 1.0, Tolerance::default()).is_err());
    }
}
