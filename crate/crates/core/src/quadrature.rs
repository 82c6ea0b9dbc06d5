//! Adaptive Simpson quadrature with an absolute error target.
//!
//! Every subinterval must satisfy the Richardson criterion
//! `|S(left) + S(right) - S(whole)| <= 15 * tol` before `max_depth` halvings,
//! otherwise the integration is reported as non-convergent rather than
//! silently returning the last estimate.

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_DEPTH: u32 = 40;

pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Ok(0.0);
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("integration bounds [{a}, {b}]")));
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let fa = f(lo);
    let fb = f(hi);
    let m = 0.5 * (lo + hi);
    let fm = f(m);
    let whole = simpson(lo, hi, fa, fm, fb);
    let v = recurse(&f, lo, hi, fa, fm, fb, whole, tol, max_depth, max_depth)?;
    if !v.is_finite() {
        return Err(Error::Domain(format!("integrand is not finite on [{lo}, {hi}]")));
    }
    Ok(sign * v)
}

/// Integrates with the crate-wide defaults (absolute 1e-12, depth 40).
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    adaptive_simpson(f, a, b, DEFAULT_TOL, DEFAULT_MAX_DEPTH)
}

#[inline]
fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    max_depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 || !(lm > a && rm < b) {
        return Err(Error::Quadrature { a, b, tol, depth: max_depth });
    }
    let l = recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, max_depth)?;
    let r = recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, max_depth)?;
    Ok(l + r)
}
