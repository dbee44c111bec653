//! Bracketed scalar root search: bisection interleaved with regula falsi
//! steps, falling back to bisection whenever a secant step fails to halve
//! the bracket.

use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_ITER: usize = 400;

/// Finds `x` in `[lo, hi]` with `f(x) = 0`, given a sign change on the
/// endpoints.
///
/// Stops when `|f(x)| <= ftol`, when the bracket is narrower than `xtol`,
/// or when no float lies strictly inside the bracket. Passing zero for
/// both tolerances runs to full working precision.
pub fn find_root<T, F>(f: F, lo: T, hi: T, xtol: T, ftol: T) -> Result<T>
where
    T: Real,
    F: Fn(T) -> T,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut fa = f(a);
    let mut fb = f(b);
    if !(fa.is_finite() && fb.is_finite()) {
        return Err(Error::Numerical(format!(
            "non-finite function value on bracket [{a}, {b}]"
        )));
    }
    if fa.abs() <= ftol || fa == T::zero() {
        return Ok(a);
    }
    if fb.abs() <= ftol || fb == T::zero() {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Numerical(format!(
            "no sign change on [{a}, {b}]: f = ({fa}, {fb})"
        )));
    }

    let half = T::lit(0.5);
    let mut use_secant = true;
    for _ in 0..MAX_ITER {
        let width = b - a;
        if width <= xtol {
            break;
        }
        let mid = a + half * width;
        let mut s = mid;
        if use_secant {
            let candidate = b - fb * (b - a) / (fb - fa);
            if candidate > a && candidate < b {
                s = candidate;
            }
        }
        if s <= a || s >= b {
            // Bracket is down to adjacent floats.
            break;
        }
        let fs = f(s);
        if !fs.is_finite() {
            return Err(Error::Numerical(format!("non-finite function value at {s}")));
        }
        if fs == T::zero() || fs.abs() <= ftol {
            return Ok(s);
        }
        if fs.signum() == fa.signum() {
            a = s;
            fa = fs;
        } else {
            b = s;
            fb = fs;
        }
        use_secant = b - a <= half * width;
    }
    Ok(if fa.abs() <= fb.abs() { a } else { b })
}
