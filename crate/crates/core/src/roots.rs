//! Bracketing root finders for monotone scalar maps.

use crate::error::{Error, Result};

/// A sign-change bracket `[lo, hi]` with the function values at both ends.
#[derive(Debug, Clone, Copy)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

/// Grows `[lo, hi]` geometrically until `f` (assumed increasing) is
/// negative at `lo` and positive at `hi`.
pub fn expand_increasing<F>(mut f: F, mut lo: f64, mut hi: f64, max_doublings: u32) -> Result<Bracket>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut f_lo = f(lo)?;
    let mut f_hi = f(hi)?;
    let mut step = (hi - lo).max(1.0);
    let mut doublings = 0;
    while f_lo > 0.0 {
        if doublings == max_doublings {
            return Err(Error::BracketExhausted { doublings });
        }
        hi = lo;
        f_hi = f_lo;
        lo -= step;
        step *= 2.0;
        f_lo = f(lo)?;
        doublings += 1;
    }
    while f_hi < 0.0 {
        if doublings == max_doublings {
            return Err(Error::BracketExhausted { doublings });
        }
        lo = hi;
        f_lo = f_hi;
        hi += step;
        step *= 2.0;
        f_hi = f(hi)?;
        doublings += 1;
    }
    Ok(Bracket { lo, hi, f_lo, f_hi })
}

/// Brent's method on a sign-change bracket. Stops when the bracket is
/// narrower than `xtol` (plus a few ulps) or an exact zero is hit.
pub fn brent<F>(mut f: F, bracket: Bracket, xtol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (bracket.lo, bracket.hi);
    let (mut fa, mut fb) = (bracket.f_lo, bracket.f_hi);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Integrity(format!(
            "no sign change on [{a}, {b}]: f = ({fa}, {fb})"
        )));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
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
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
    }
    Ok(b)
}

/// Plain bisection on a sign-change bracket, returning the final bracket.
/// Slower than Brent but every iterate carries the sign certificate.
pub fn bisect<F>(mut f: F, mut bracket: Bracket, xtol: f64, max_iter: usize) -> Result<Bracket>
where
    F: FnMut(f64) -> Result<f64>,
{
    for _ in 0..max_iter {
        if bracket.hi - bracket.lo <= xtol {
            break;
        }
        let mid = 0.5 * (bracket.lo + bracket.hi);
        if mid <= bracket.lo || mid >= bracket.hi {
            break;
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(Bracket {
                lo: mid,
                hi: mid,
                f_lo: 0.0,
                f_hi: 0.0,
            });
        }
        if fm.signum() == bracket.f_lo.signum() {
            bracket.lo = mid;
            bracket.f_lo = fm;
        } else {
            bracket.hi = mid;
            bracket.f_hi = fm;
        }
    }
    Ok(bracket)
}
