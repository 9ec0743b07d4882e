//! Small numerical kernels: smooth ramps, the mollifier, adaptive quadrature
//! and power-law decay fits.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// One-sided factor `e^{-1/u}` for `u > 0`, zero otherwise.
pub fn one_sided<T: Real>(u: T) -> T {
    if u > T::zero() {
        (-u.recip()).exp()
    } else {
        T::zero()
    }
}

/// Derivative of [`one_sided`].
fn one_sided_deriv<T: Real>(u: T) -> T {
    if u > T::zero() {
        one_sided(u) / (u * u)
    } else {
        T::zero()
    }
}

/// Smooth monotone step: 0 for `u <= 0`, 1 for `u >= 1`, C^∞ in between.
///
/// `smooth_step(u) + smooth_step(1 - u) == 1` up to one rounding, so ramps
/// built from it telescope into partitions of unity.
pub fn smooth_step<T: Real>(u: T) -> T {
    if u <= T::zero() {
        return T::zero();
    }
    if u >= T::one() {
        return T::one();
    }
    let a = one_sided(u);
    let b = one_sided(T::one() - u);
    a / (a + b)
}

/// Derivative of [`smooth_step`].
pub fn smooth_step_deriv<T: Real>(u: T) -> T {
    if u <= T::zero() || u >= T::one() {
        return T::zero();
    }
    let a = one_sided(u);
    let b = one_sided(T::one() - u);
    let da = one_sided_deriv(u);
    let db = one_sided_deriv(T::one() - u);
    let s = a + b;
    (da * b + a * db) / (s * s)
}

/// Standard mollifier `exp(-1/(1-t^2))` on `(-1,1)`, zero outside.
pub fn mollifier<T: Real>(t: T) -> T {
    let v = T::one() - t * t;
    if v > T::zero() {
        (-v.recip()).exp()
    } else {
        T::zero()
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Returns a divergence error if the integrand produces a non-finite value.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if !delta.is_finite() {
            return f64::NAN;
        }
        let floor = 8.0 * f64::EPSILON * (left.abs() + right.abs());
        if depth == 0 || delta.abs() <= 15.0 * tol.max(floor) {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let v = rec(f, a, b, fa, fm, fb, whole, tol, 30);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Divergence(format!("integral over [{a}, {b}] is not finite")))
    }
}

/// Integrates over `[a, b]` by splitting into panels no wider than `panel`,
/// each handled by [`adaptive_simpson`].
pub fn panel_quadrature<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panel: f64, tol: f64) -> Result<f64> {
    let n = (((b - a) / panel).ceil() as usize).max(1);
    let h = (b - a) / n as f64;
    let mut total = 0.0;
    for i in 0..n {
        let lo = a + h * i as f64;
        let hi = if i + 1 == n { b } else { lo + h };
        total += adaptive_simpson(f, lo, hi, tol / n as f64)?;
    }
    Ok(total)
}

/// Least-squares slope `M` of `ln(env) ≈ c - M ln(1+u)`.
///
/// Points with `env <= floor` are dropped. Returns `f64::INFINITY` when
/// fewer than three points survive, which means the envelope fell below
/// the floor before the fit window closed.
pub fn fit_decay_exponent(us: &[f64], env: &[f64], floor: f64) -> f64 {
    let pts: Vec<(f64, f64)> = us
        .iter()
        .zip(env)
        .filter(|(_, &e)| e > floor)
        .map(|(&u, &e)| ((1.0 + u).ln(), e.ln()))
        .collect();
    if pts.len() < 3 {
        return f64::INFINITY;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return f64::INFINITY;
    }
    -sxy / sxx
}
