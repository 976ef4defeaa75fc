//! Bracketing root finders for scalar functions.
//!
//! Both solvers keep a sign-change bracket at every iteration and return it,
//! so callers can report a certified enclosure rather than a bare estimate.

use crate::error::{Error, Result};

/// A sign-change enclosure `[lo, hi]` of a root.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
    pub iterations: usize,
}

impl Bracket {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// The endpoint with the smaller residual.
    pub fn best(&self) -> f64 {
        if self.f_lo.abs() <= self.f_hi.abs() {
            self.lo
        } else {
            self.hi
        }
    }
}

fn check_bracket(a: f64, b: f64, fa: f64, fb: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::InvalidParams(format!("invalid bracket [{a}, {b}]")));
    }
    if !(fa.is_finite() && fb.is_finite()) || fa * fb > 0.0 {
        return Err(Error::NoSignChange { a, b, fa, fb });
    }
    Ok(())
}

/// Plain bisection until the bracket is no wider than `xtol`.
pub fn bisect<F>(mut f: F, a: f64, b: f64, xtol: f64, max_iter: usize) -> Result<Bracket>
where
    F: FnMut(f64) -> f64,
{
    let (mut lo, mut hi) = (a, b);
    let (mut f_lo, mut f_hi) = (f(lo), f(hi));
    check_bracket(lo, hi, f_lo, f_hi)?;
    for iterations in 0..max_iter {
        if f_lo == 0.0 {
            return Ok(Bracket { lo, hi: lo, f_lo, f_hi: f_lo, iterations });
        }
        if f_hi == 0.0 {
            return Ok(Bracket { lo: hi, hi, f_lo: f_hi, f_hi, iterations });
        }
        if hi - lo <= xtol {
            return Ok(Bracket { lo, hi, f_lo, f_hi, iterations });
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Adjacent floats: cannot shrink further.
            return Ok(Bracket { lo, hi, f_lo, f_hi, iterations });
        }
        let f_mid = f(mid);
        if !f_mid.is_finite() {
            return Err(Error::NoConvergence { iterations, residual: f_mid });
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, residual: f_lo.abs().min(f_hi.abs()) })
}

/// Brent's method (inverse quadratic interpolation safeguarded by
/// bisection). Terminates once the bracket is no wider than `xtol`, up to a
/// few ulps of the root.
pub fn brent<F>(mut f: F, a: f64, b: f64, xtol: f64, max_iter: usize) -> Result<Bracket>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    check_bracket(a, b, fa, fb)?;
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for iterations in 0..max_iter {
        if (fb > 0.0) == (fc > 0.0) && fb != 0.0 {
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
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.25 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            let (lo, hi, f_lo, f_hi) = if fb == 0.0 {
                (b, b, fb, fb)
            } else if b < c {
                (b, c, fb, fc)
            } else {
                (c, b, fc, fb)
            };
            return Ok(Bracket { lo, hi, f_lo, f_hi, iterations });
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let rr = fb / fc;
                p = s * (2.0 * xm * qq * (qq - rr) - (b - a) * (rr - 1.0));
                q = (qq - 1.0) * (rr - 1.0) * (s - 1.0);
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
        if !fb.is_finite() {
            return Err(Error::NoConvergence { iterations, residual: fb });
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, residual: fb.abs() })
}
