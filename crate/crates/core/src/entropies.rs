//! Csiszár entropies `φ` with `φ(1) = 0`, their Legendre conjugates, the
//! anisotropic prox `aprox` and the softmin.

use alloc::vec::Vec;

use crate::lse::{log_sum_exp, weighted_lse};
use crate::measures::DiscreteMeasure;
use crate::{Error, Result};

/// Tolerance on `|μ_i - ν_i|` (relative to `max(1, m(ν))`) under which the
/// balanced entropy treats two weight vectors as equal.
pub const BALANCED_MARGINAL_TOL: f64 = 1e-9;

const APROX_MAX_ITERS: usize = 100;
const APROX_RESIDUAL: f64 = 1e-12;

/// Marginal penalty of an unbalanced transport problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Entropy {
    /// `φ(x) = ρ (x log x - x + 1)`.
    Kl { rho: f64 },
    /// `φ(x) = ρ (x - 1 - log x)`.
    Berg { rho: f64 },
    /// Indicator of `{1}`: hard marginal constraint.
    Balanced,
}

impl Entropy {
    pub fn kl(rho: f64) -> Result<Self> {
        check_rho(rho)?;
        Ok(Entropy::Kl { rho })
    }

    pub fn berg(rho: f64) -> Result<Self> {
        check_rho(rho)?;
        Ok(Entropy::Berg { rho })
    }

    pub fn rho(&self) -> Option<f64> {
        match *self {
            Entropy::Kl { rho } | Entropy::Berg { rho } => Some(rho),
            Entropy::Balanced => None,
        }
    }

    pub fn is_kl(&self) -> bool {
        matches!(self, Entropy::Kl { .. })
    }

    /// Smooth and strictly convex conjugate (KL and Berg).
    pub fn has_strictly_convex_conj(&self) -> bool {
        !matches!(self, Entropy::Balanced)
    }

    pub fn validate(&self) -> Result<()> {
        match self.rho() {
            Some(rho) => check_rho(rho),
            None => Ok(()),
        }
    }

    /// `φ(x)`; `+inf` outside the domain.
    pub fn phi(&self, x: f64) -> f64 {
        if x < 0.0 {
            return f64::INFINITY;
        }
        match *self {
            Entropy::Kl { rho } => {
                if x == 0.0 {
                    rho
                } else {
                    rho * (x * libm::log(x) - x + 1.0)
                }
            }
            Entropy::Berg { rho } => {
                if x == 0.0 {
                    f64::INFINITY
                } else {
                    rho * (x - 1.0 - libm::log(x))
                }
            }
            Entropy::Balanced => {
                if x == 1.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Recession slope `φ'_∞ = lim φ(x)/x`.
    pub fn slope_at_infinity(&self) -> f64 {
        match *self {
            Entropy::Kl { .. } | Entropy::Balanced => f64::INFINITY,
            Entropy::Berg { rho } => rho,
        }
    }

    /// Legendre conjugate `φ*(x)`.
    pub fn conj(&self, x: f64) -> Result<f64> {
        match *self {
            Entropy::Kl { rho } => Ok(rho * libm::expm1(x / rho)),
            Entropy::Berg { rho } => {
                if x >= rho {
                    Err(Error::Domain("Berg conjugate requires x < rho"))
                } else {
                    Ok(-rho * libm::log1p(-x / rho))
                }
            }
            Entropy::Balanced => Ok(x),
        }
    }

    /// `∇φ*(x)`.
    pub fn conj_grad(&self, x: f64) -> Result<f64> {
        match *self {
            Entropy::Kl { rho } => Ok(libm::exp(x / rho)),
            Entropy::Berg { rho } => {
                if x >= rho {
                    Err(Error::Domain("Berg conjugate requires x < rho"))
                } else {
                    Ok(rho / (rho - x))
                }
            }
            Entropy::Balanced => Ok(1.0),
        }
    }

    /// `∇²φ*(x)`.
    pub fn conj_hess(&self, x: f64) -> Result<f64> {
        match *self {
            Entropy::Kl { rho } => Ok(libm::exp(x / rho) / rho),
            Entropy::Berg { rho } => {
                if x >= rho {
                    Err(Error::Domain("Berg conjugate requires x < rho"))
                } else {
                    let d = rho - x;
                    Ok(rho / (d * d))
                }
            }
            Entropy::Balanced => Ok(0.0),
        }
    }

    /// Dual marginal term `-φ*(-f)`; `-inf` where `φ*(-f) = +inf`.
    pub fn dual_term(&self, f: f64) -> f64 {
        match *self {
            Entropy::Kl { rho } => -rho * libm::expm1(-f / rho),
            Entropy::Berg { rho } => {
                if f <= -rho {
                    f64::NEG_INFINITY
                } else {
                    rho * libm::log1p(f / rho)
                }
            }
            Entropy::Balanced => f,
        }
    }

    /// Open interval `(lo, hi)` of `x` on which `φ*(x)` is finite.
    pub(crate) fn conj_domain_upper(&self) -> f64 {
        match *self {
            Entropy::Berg { rho } => rho,
            _ => f64::INFINITY,
        }
    }

    /// `aprox(x) = argmin_y ε e^{(x-y)/ε} + φ*(y)`.
    pub fn aprox(&self, eps: f64, x: f64) -> Result<f64> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidParameter("eps must be > 0"));
        }
        if !x.is_finite() {
            return Err(Error::NonFinite("aprox argument"));
        }
        match *self {
            Entropy::Kl { rho } => Ok(rho / (eps + rho) * x),
            Entropy::Balanced => Ok(x),
            Entropy::Berg { rho } => berg_aprox(rho, eps, x),
        }
    }

    /// `D_φ(μ | ν) = Σ_{ν_i>0} ν_i φ(μ_i/ν_i) + φ'_∞ Σ_{ν_i=0} μ_i`.
    pub fn divergence(&self, mu: &[f64], nu: &[f64]) -> Result<f64> {
        if mu.len() != nu.len() {
            return Err(Error::LengthMismatch {
                expected: nu.len(),
                found: mu.len(),
            });
        }
        for (i, (&m, &n)) in mu.iter().zip(nu).enumerate() {
            if !m.is_finite() || !n.is_finite() {
                return Err(Error::NonFinite("divergence arguments"));
            }
            if m < 0.0 || n < 0.0 {
                return Err(Error::NegativeWeight { index: i });
            }
        }
        let slope = self.slope_at_infinity();
        let tol = BALANCED_MARGINAL_TOL * nu.iter().sum::<f64>().max(1.0);
        let mut total = 0.0;
        for (&m, &n) in mu.iter().zip(nu) {
            let term = if n == 0.0 {
                if m == 0.0 {
                    0.0
                } else {
                    slope * m
                }
            } else {
                match *self {
                    Entropy::Kl { rho } => {
                        if m == 0.0 {
                            rho * n
                        } else {
                            rho * (m * libm::log(m / n) - m + n)
                        }
                    }
                    Entropy::Berg { rho } => {
                        if m == 0.0 {
                            f64::INFINITY
                        } else {
                            rho * (m - n - n * libm::log(m / n))
                        }
                    }
                    Entropy::Balanced => {
                        if libm::fabs(m - n) <= tol {
                            0.0
                        } else {
                            f64::INFINITY
                        }
                    }
                }
            };
            total += term;
        }
        // rounding can push strictly convex cases a hair below zero
        Ok(total.max(0.0))
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::InvalidParameter("rho must be > 0"));
    }
    Ok(())
}

/// Root of `h(u) = ln ρ - u - (x - ρ + e^u)/ε` where `y = ρ - e^u`.
///
/// `h` is decreasing and concave in `u`; Newton steps are kept inside a
/// bisection bracket.
fn berg_aprox(rho: f64, eps: f64, x: f64) -> Result<f64> {
    let ln_rho = libm::log(rho);
    let h = |u: f64| ln_rho - u - (x - rho + libm::exp(u)) / eps;
    let dh = |u: f64| -1.0 - libm::exp(u) / eps;

    let mut u = if x < rho { libm::log(rho - x) } else { ln_rho };
    let (mut lo, mut hi) = (u, u);
    let mut step = 1.0;
    while h(lo) < 0.0 {
        lo -= step;
        step *= 2.0;
        if step > 1e6 {
            return Err(Error::NoConvergence("Berg aprox bracketing"));
        }
    }
    step = 1.0;
    while h(hi) > 0.0 {
        hi += step;
        step *= 2.0;
        if step > 1e6 {
            return Err(Error::NoConvergence("Berg aprox bracketing"));
        }
    }
    for _ in 0..APROX_MAX_ITERS {
        let r = h(u);
        if libm::fabs(r) < APROX_RESIDUAL {
            return Ok(below(rho, u));
        }
        if r > 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        let mut next = u - r / dh(u);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == u || hi - lo <= f64::EPSILON * libm::fabs(u).max(1.0) {
            return Ok(below(rho, next));
        }
        u = next;
    }
    Err(Error::NoConvergence("Berg aprox Newton"))
}

// ρ - e^u, kept strictly inside the conjugate domain
fn below(rho: f64, u: f64) -> f64 {
    (rho - libm::exp(u)).min(f64::from_bits(rho.to_bits() - 1))
}

/// `Smin_α^ε(f) = -ε log Σ_i α_i e^{-f_i/ε}` (zero-weight atoms are ignored).
pub fn softmin(a: &DiscreteMeasure, eps: f64, f: &[f64]) -> Result<f64> {
    softmin_weights(a.weights(), eps, f)
}

/// [`softmin`] on a raw weight vector.
pub fn softmin_weights(w: &[f64], eps: f64, f: &[f64]) -> Result<f64> {
    if w.len() != f.len() {
        return Err(Error::LengthMismatch {
            expected: w.len(),
            found: f.len(),
        });
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter("eps must be > 0"));
    }
    if !(w.iter().sum::<f64>() > 0.0) {
        return Err(Error::ZeroMass);
    }
    let lo = w
        .iter()
        .zip(f)
        .filter(|(&wi, _)| wi > 0.0)
        .map(|(_, &fi)| fi)
        .fold(f64::INFINITY, f64::min);
    let terms: Vec<f64> = w
        .iter()
        .zip(f)
        .map(|(&wi, &fi)| {
            if wi > 0.0 {
                libm::log(wi) - (fi - lo) / eps
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    Ok(lo - eps * log_sum_exp(&terms))
}

/// Softmin from precomputed log-weights, with `f` given as a closure.
pub(crate) fn softmin_log(
    log_w: &[f64],
    eps: f64,
    f: impl Fn(usize) -> f64,
    scratch: &mut Vec<f64>,
) -> f64 {
    -eps * weighted_lse(log_w, |i| -f(i) / eps, scratch)
}
