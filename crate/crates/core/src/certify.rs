//! Translation-invariant norms, a scalar maximization oracle and duality-gap certificates.

use crate::{Error, Result};

/// Gaps below this (negative) value are reported as a weak-duality breach.
pub const WEAK_DUALITY_SLACK: f64 = 1e-8;

/// `(max f - min f) / 2`, i.e. `inf_λ ‖f + λ‖_∞`.
pub fn hilbert_norm(f: &[f64]) -> f64 {
    let (lo, hi) = min_max(f);
    0.5 * (hi - lo)
}

/// `max_{i,j} |f_i + g_j|`, i.e. `min_λ ‖f + λ‖_∞ + ‖g - λ‖_∞`.
pub fn double_star_norm(f: &[f64], g: &[f64]) -> f64 {
    let (fl, fh) = min_max(f);
    let (gl, gh) = min_max(g);
    libm::fabs(fh + gh).max(libm::fabs(fl + gl))
}

fn min_max(x: &[f64]) -> (f64, f64) {
    x.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Minimizes `‖f + λ‖_∞` over the grid `lo, lo + step, …, hi`.
pub fn grid_min_hilbert(f: &[f64], lo: f64, hi: f64, step: f64) -> f64 {
    let (fl, fh) = min_max(f);
    grid_min(lo, hi, step, |l| libm::fabs(fl + l).max(libm::fabs(fh + l)))
}

/// Minimizes `‖f + λ‖_∞ + ‖g - λ‖_∞` over the grid `lo, lo + step, …, hi`.
pub fn grid_min_double_star(f: &[f64], g: &[f64], lo: f64, hi: f64, step: f64) -> f64 {
    let (fl, fh) = min_max(f);
    let (gl, gh) = min_max(g);
    grid_min(lo, hi, step, |l| {
        libm::fabs(fl + l).max(libm::fabs(fh + l)) + libm::fabs(gl - l).max(libm::fabs(gh - l))
    })
}

fn grid_min(lo: f64, hi: f64, step: f64, h: impl Fn(f64) -> f64) -> f64 {
    let n = libm::floor((hi - lo) / step) as usize;
    (0..=n)
        .map(|k| h(lo + k as f64 * step))
        .fold(f64::INFINITY, f64::min)
}

/// Golden-section maximization of a concave function on `[lo, hi]`.
///
/// Returns `(argmax, max)` with the argmax located to within `tol`. Fails with
/// [`Error::NotBracketed`] when the objective increases outward at both ends,
/// which no concave function can do.
pub fn scalar_max_oracle(
    mut obj: impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    if !(lo.is_finite() && hi.is_finite()) || lo >= hi || !(tol > 0.0) {
        return Err(Error::InvalidParameter("bracket"));
    }
    let probe = 1e-6 * (hi - lo);
    let rising_left = obj(lo) > obj(lo + probe);
    let rising_right = obj(hi) > obj(hi - probe);
    if rising_left && rising_right {
        return Err(Error::NotBracketed);
    }
    let r = 0.5 * (libm::sqrt(5.0) - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = obj(x1);
    let mut f2 = obj(x2);
    while b - a > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = obj(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = obj(x2);
        }
    }
    let mut best = (0.5 * (a + b), f64::NEG_INFINITY);
    for x in [a, 0.5 * (a + b), b] {
        let v = obj(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub feasibility_violation: f64,
    pub passed: bool,
    pub weak_duality_breach: bool,
}

/// Packages a primal/dual pair. Passes when the gap and the dual constraint
/// violation are both within `tol` and the gap is not negative beyond
/// [`WEAK_DUALITY_SLACK`].
pub fn assemble_certificate(primal: f64, dual: f64, feasibility_violation: f64, tol: f64) -> Certificate {
    let gap = primal - dual;
    let violation = feasibility_violation.max(0.0);
    let weak_duality_breach = gap < -WEAK_DUALITY_SLACK;
    Certificate {
        primal,
        dual,
        gap,
        feasibility_violation: violation,
        passed: gap <= tol && violation <= tol && !weak_duality_breach,
        weak_duality_breach,
    }
}
