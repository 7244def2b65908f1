//! Bracketed root finding.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum RootError {
    #[error("no sign change on [{lo}, {hi}] (f = {flo}, {fhi})")]
    NoBracket { lo: f64, hi: f64, flo: f64, fhi: f64 },
    #[error("root finder did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("bracket expansion reached {limit} without a sign change")]
    ExpansionExhausted { limit: f64 },
}

const MAX_ITER: usize = 200;

/// Brent's method on `[lo, hi]`.
///
/// Terminates once the bracket is narrower than `xtol + 4·eps·|x|` or an
/// exact zero is hit.
pub fn brent<F>(mut f: F, lo: f64, hi: f64, xtol: f64) -> Result<f64, RootError>
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
    if fa.is_nan() || fb.is_nan() || fa.signum() == fb.signum() {
        return Err(RootError::NoBracket { lo, hi, flo: fa, fhi: fb });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_ITER {
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
        fb = f(b);
    }
    Err(RootError::NoConvergence { iterations: MAX_ITER })
}

/// Doubles `hi` (starting from `start`) until `f(hi)` has the opposite sign
/// of `f_lo`, giving up once `limit` is exceeded.
pub fn expand_upper<F>(mut f: F, f_lo: f64, start: f64, limit: f64) -> Result<f64, RootError>
where
    F: FnMut(f64) -> f64,
{
    let mut hi = start;
    loop {
        let fh = f(hi);
        if fh == 0.0 || (fh.signum() != f_lo.signum() && !fh.is_nan()) {
            return Ok(hi);
        }
        if hi >= limit {
            return Err(RootError::ExpansionExhausted { limit });
        }
        hi *= 2.0;
    }
}
