//! Dual functionals of entropic unbalanced transport.
//!
//! For a problem `(α, β, C, φ₁, φ₂, ε)` and potentials `(f, g)`:
//!
//! ```text
//! F_ε(f, g)    = ⟨α, -φ₁*(-f)⟩ + ⟨β, -φ₂*(-g)⟩ - ε ⟨α⊗β, e^{(f⊕g - C)/ε} - 1⟩
//! G_ε(f, g, λ) = F_ε(f + λ, g - λ)
//! H_ε(f, g)    = sup_λ G_ε(f, g, λ)
//! ```
//!
//! `H_ε` is invariant under `(f + μ, g - μ)`. At `ε = 0` the exponential term
//! is replaced by the constraint `f ⊕ g ≤ C`.

use alloc::vec::Vec;

use crate::entropies::Entropy;
use crate::lse::{log_sum_exp, log_weights};
use crate::measures::{build_cost_matrix, CostMatrix, CostSpec, DiscreteMeasure};
use crate::ot1d::SparsePlan;
use crate::{Error, Result};

/// Absolute tolerance on `max(f ⊕ g - C)` for dual feasibility at `ε = 0`.
pub const DUAL_FEASIBILITY_TOL: f64 = 1e-9;

const NEWTON_MAX_ITERS: usize = 200;
const NEWTON_RESIDUAL: f64 = 1e-11;

/// Dual potentials `f` (on the support of α) and `g` (on the support of β).
#[derive(Debug, Clone, PartialEq)]
pub struct DualPair {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

impl DualPair {
    pub fn new(f: Vec<f64>, g: Vec<f64>) -> Self {
        Self { f, g }
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            f: alloc::vec![0.0; n],
            g: alloc::vec![0.0; m],
        }
    }

    /// `(f + λ, g - λ)`.
    pub fn translated(&self, lam: f64) -> Self {
        Self {
            f: self.f.iter().map(|x| x + lam).collect(),
            g: self.g.iter().map(|x| x - lam).collect(),
        }
    }

    /// `max(‖f - f'‖_∞, ‖g - g'‖_∞)`.
    pub fn sup_dist(&self, other: &Self) -> f64 {
        crate::sup_dist(&self.f, &other.f).max(crate::sup_dist(&self.g, &other.g))
    }

    pub(crate) fn check(&self, n: usize, m: usize) -> Result<()> {
        if self.f.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: self.f.len(),
            });
        }
        if self.g.len() != m {
            return Err(Error::LengthMismatch {
                expected: m,
                found: self.g.len(),
            });
        }
        if self.f.iter().chain(&self.g).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("dual potentials"));
        }
        Ok(())
    }
}

/// An unbalanced transport problem between two 1-D measures.
#[derive(Debug, Clone)]
pub struct UotProblem {
    pub alpha: DiscreteMeasure,
    pub beta: DiscreteMeasure,
    pub cost: CostSpec,
    pub ent1: Entropy,
    pub ent2: Entropy,
    pub eps: f64,
    matrix: Option<CostMatrix>,
}

impl UotProblem {
    /// Validates the inputs; the dense cost matrix is materialized when
    /// `ε > 0` or the cost is explicit.
    pub fn new(
        alpha: DiscreteMeasure,
        beta: DiscreteMeasure,
        cost: CostSpec,
        ent1: Entropy,
        ent2: Entropy,
        eps: f64,
    ) -> Result<Self> {
        cost.validate(&alpha, &beta)?;
        ent1.validate()?;
        ent2.validate()?;
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::InvalidParameter("eps must be >= 0"));
        }
        let matrix = if eps > 0.0 {
            Some(build_cost_matrix(&alpha, &beta, &cost)?)
        } else {
            None
        };
        Ok(Self {
            alpha,
            beta,
            cost,
            ent1,
            ent2,
            eps,
            matrix,
        })
    }

    /// Same measures, cost and entropies with a different `ε`.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(
            self.alpha.clone(),
            self.beta.clone(),
            self.cost.clone(),
            self.ent1,
            self.ent2,
            eps,
        )
    }

    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    pub fn m(&self) -> usize {
        self.beta.len()
    }

    #[inline]
    pub fn cost_at(&self, i: usize, j: usize) -> f64 {
        match (&self.matrix, &self.cost) {
            (Some(c), _) => c.get(i, j),
            (None, CostSpec::Explicit(c)) => c.get(i, j),
            (None, spec) => spec.at(&self.alpha, &self.beta, i, j),
        }
    }

    /// Dense cost matrix (built on demand when not cached).
    pub fn cost_matrix(&self) -> Result<CostMatrix> {
        match &self.matrix {
            Some(c) => Ok(c.clone()),
            None => build_cost_matrix(&self.alpha, &self.beta, &self.cost),
        }
    }

    pub fn both_kl(&self) -> bool {
        self.ent1.is_kl() && self.ent2.is_kl()
    }
}

/// `max_{i,j: α_i β_j > 0} f_i + g_j - C_ij` (`-inf` when every product weight vanishes).
pub fn dual_violation(prob: &UotProblem, d: &DualPair) -> f64 {
    let aw = prob.alpha.weights();
    let bw = prob.beta.weights();
    let mut worst = f64::NEG_INFINITY;
    for i in 0..prob.n() {
        if aw[i] == 0.0 {
            continue;
        }
        for j in 0..prob.m() {
            if bw[j] == 0.0 {
                continue;
            }
            worst = worst.max(d.f[i] + d.g[j] - prob.cost_at(i, j));
        }
    }
    worst
}

/// `-ε ⟨α⊗β, e^{(f⊕g - C)/ε} - 1⟩`, or the feasibility check when `ε = 0`.
fn coupling_term(prob: &UotProblem, f: &[f64], g: &[f64]) -> Result<f64> {
    let eps = prob.eps;
    if eps == 0.0 {
        let v = dual_violation(prob, &DualPair::new(f.to_vec(), g.to_vec()));
        if v > DUAL_FEASIBILITY_TOL {
            return Err(Error::InfeasibleDual { violation: v });
        }
        return Ok(0.0);
    }
    let aw = prob.alpha.weights();
    let bw = prob.beta.weights();
    let mut s = 0.0;
    for i in 0..prob.n() {
        if aw[i] == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for j in 0..prob.m() {
            row += bw[j] * libm::expm1((f[i] + g[j] - prob.cost_at(i, j)) / eps);
        }
        s += aw[i] * row;
    }
    Ok(-eps * s)
}

fn marginal_terms(prob: &UotProblem, f: &[f64], g: &[f64]) -> f64 {
    let a: f64 = prob
        .alpha
        .weights()
        .iter()
        .zip(f)
        .filter(|(&w, _)| w > 0.0)
        .map(|(&w, &x)| w * prob.ent1.dual_term(x))
        .sum();
    let b: f64 = prob
        .beta
        .weights()
        .iter()
        .zip(g)
        .filter(|(&w, _)| w > 0.0)
        .map(|(&w, &x)| w * prob.ent2.dual_term(x))
        .sum();
    a + b
}

/// `F_ε(f, g)`.
pub fn eval_f(prob: &UotProblem, d: &DualPair) -> Result<f64> {
    d.check(prob.n(), prob.m())?;
    let c = coupling_term(prob, &d.f, &d.g)?;
    Ok(marginal_terms(prob, &d.f, &d.g) + c)
}

/// `G_ε(f, g, λ) = F_ε(f + λ, g - λ)`.
pub fn eval_g(prob: &UotProblem, d: &DualPair, lam: f64) -> Result<f64> {
    if !lam.is_finite() {
        return Err(Error::NonFinite("translation"));
    }
    eval_f(prob, &d.translated(lam))
}

/// `log ⟨w, e^{-h/ρ}⟩`.
pub(crate) fn log_mean_exp(log_w: &[f64], h: &[f64], rho: f64) -> f64 {
    let terms: Vec<f64> = log_w
        .iter()
        .zip(h)
        .map(|(&lw, &x)| {
            if lw == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                lw - x / rho
            }
        })
        .collect();
    log_sum_exp(&terms)
}

/// Optimal translation `λ*(f, g) = argmax_λ G_ε(f, g, λ)`.
///
/// Closed form for KL/KL; otherwise a bracketed Newton solve of
/// `⟨α, ∇φ₁*(-f-λ)⟩ = ⟨β, ∇φ₂*(-g+λ)⟩` started at `λ = 0`.
pub fn lambda_star(prob: &UotProblem, d: &DualPair) -> Result<f64> {
    lambda_star_from(prob, d, 0.0)
}

/// [`lambda_star`] with a warm start for the Newton path.
pub fn lambda_star_from(prob: &UotProblem, d: &DualPair, warm: f64) -> Result<f64> {
    d.check(prob.n(), prob.m())?;
    match (prob.ent1, prob.ent2) {
        (Entropy::Balanced, Entropy::Balanced) => Err(Error::TranslationUndefined),
        (Entropy::Kl { rho: r1 }, Entropy::Kl { rho: r2 }) => {
            let la = log_mean_exp(&log_weights(prob.alpha.weights()), &d.f, r1);
            let lb = log_mean_exp(&log_weights(prob.beta.weights()), &d.g, r2);
            Ok(r1 * r2 / (r1 + r2) * (la - lb))
        }
        _ => newton_translation(prob, &d.f, &d.g, warm),
    }
}

/// Derivative of `λ ↦ G_ε(f, g, λ)` and its second derivative.
fn translation_slope(prob: &UotProblem, f: &[f64], g: &[f64], lam: f64) -> (f64, f64, f64) {
    let (mut pos, mut neg, mut curv) = (0.0, 0.0, 0.0);
    for (&w, &x) in prob.alpha.weights().iter().zip(f) {
        if w > 0.0 {
            let y = -x - lam;
            pos += w * prob.ent1.conj_grad(y).unwrap_or(f64::INFINITY);
            curv += w * prob.ent1.conj_hess(y).unwrap_or(f64::INFINITY);
        }
    }
    for (&w, &x) in prob.beta.weights().iter().zip(g) {
        if w > 0.0 {
            let y = -x + lam;
            neg += w * prob.ent2.conj_grad(y).unwrap_or(f64::INFINITY);
            curv += w * prob.ent2.conj_hess(y).unwrap_or(f64::INFINITY);
        }
    }
    (pos - neg, -curv, pos + neg)
}

fn newton_translation(prob: &UotProblem, f: &[f64], g: &[f64], warm: f64) -> Result<f64> {
    // λ must keep -f-λ and -g+λ inside the conjugate domains
    let min_pos = |w: &[f64], v: &[f64]| {
        w.iter()
            .zip(v)
            .filter(|(&w, _)| w > 0.0)
            .map(|(_, &x)| x)
            .fold(f64::INFINITY, f64::min)
    };
    let dom_lo = -min_pos(prob.alpha.weights(), f) - prob.ent1.conj_domain_upper();
    let dom_hi = min_pos(prob.beta.weights(), g) + prob.ent2.conj_domain_upper();
    if !(dom_lo < dom_hi) {
        return Err(Error::Domain("no translation keeps the Berg dual finite"));
    }
    let inside = |x: f64| x > dom_lo && x < dom_hi;
    let mut x = warm;
    if !inside(x) {
        x = match (dom_lo.is_finite(), dom_hi.is_finite()) {
            (true, true) => 0.5 * (dom_lo + dom_hi),
            (true, false) => dom_lo + 1.0,
            (false, true) => dom_hi - 1.0,
            (false, false) => 0.0,
        };
    }
    let slope = |x: f64| translation_slope(prob, f, g, x);

    // bracket: slope(lo) > 0 > slope(hi)
    let (s0, _, _) = slope(x);
    let (mut lo, mut hi);
    if s0 > 0.0 {
        let mut step = 1.0;
        let mut prev = x;
        loop {
            let mut cand = prev + step;
            if cand >= dom_hi {
                cand = 0.5 * (prev + dom_hi);
            }
            let (s, _, _) = slope(cand);
            if s <= 0.0 {
                lo = prev;
                hi = cand;
                break;
            }
            prev = cand;
            step *= 2.0;
            if step > 1e300 {
                return Err(Error::NoConvergence("translation bracketing"));
            }
        }
    } else if s0 < 0.0 {
        let mut step = 1.0;
        let mut prev = x;
        loop {
            let mut cand = prev - step;
            if cand <= dom_lo {
                cand = 0.5 * (prev + dom_lo);
            }
            let (s, _, _) = slope(cand);
            if s >= 0.0 {
                lo = cand;
                hi = prev;
                break;
            }
            prev = cand;
            step *= 2.0;
            if step > 1e300 {
                return Err(Error::NoConvergence("translation bracketing"));
            }
        }
    } else {
        return Ok(x);
    }

    if !(x >= lo && x <= hi) {
        x = 0.5 * (lo + hi);
    }
    for _ in 0..NEWTON_MAX_ITERS {
        let (s, ds, scale) = slope(x);
        if s.is_finite() && libm::fabs(s) <= NEWTON_RESIDUAL * scale.max(1.0) {
            return Ok(x);
        }
        if s > 0.0 {
            lo = x;
        } else if s < 0.0 {
            hi = x;
        }
        let mut next = x - s / ds;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if hi - lo <= 4.0 * f64::EPSILON * libm::fabs(x).max(1.0) {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::NoConvergence("translation Newton"))
}

/// `H_ε(f, g) = sup_λ G_ε(f, g, λ)`.
///
/// KL/KL uses the explicit form
/// `ρ₁m(α) + ρ₂m(β) - ε⟨α⊗β, e^{(f⊕g-C)/ε}-1⟩ - (ρ₁+ρ₂)⟨α,e^{-f/ρ₁}⟩^{τ₁}⟨β,e^{-g/ρ₂}⟩^{τ₂}`.
/// Balanced/balanced returns `F_ε`, which does not depend on `λ`.
pub fn eval_h(prob: &UotProblem, d: &DualPair) -> Result<f64> {
    d.check(prob.n(), prob.m())?;
    match (prob.ent1, prob.ent2) {
        (Entropy::Balanced, Entropy::Balanced) => eval_f(prob, d),
        (Entropy::Kl { .. }, Entropy::Kl { .. }) => {
            let c = coupling_term(prob, &d.f, &d.g)?;
            Ok(kl_h_marginal(prob, &log_weights(prob.alpha.weights()), &log_weights(prob.beta.weights()), &d.f, &d.g) + c)
        }
        _ => {
            let lam = lambda_star(prob, d)?;
            eval_g(prob, d, lam)
        }
    }
}

/// Marginal part of the explicit KL/KL `H`.
pub(crate) fn kl_h_marginal(prob: &UotProblem, log_a: &[f64], log_b: &[f64], f: &[f64], g: &[f64]) -> f64 {
    let (r1, r2) = match (prob.ent1, prob.ent2) {
        (Entropy::Kl { rho: r1 }, Entropy::Kl { rho: r2 }) => (r1, r2),
        _ => unreachable!("kl_h_marginal requires KL/KL"),
    };
    let t1 = r1 / (r1 + r2);
    let t2 = r2 / (r1 + r2);
    let la = log_mean_exp(log_a, f, r1);
    let lb = log_mean_exp(log_b, g, r2);
    r1 * prob.alpha.mass() + r2 * prob.beta.mass() - (r1 + r2) * libm::exp(t1 * la + t2 * lb)
}

/// `H_0` without the feasibility check (callers guarantee `f ⊕ g ≤ C`).
pub(crate) fn h0_unchecked(prob: &UotProblem, log_a: &[f64], log_b: &[f64], f: &[f64], g: &[f64]) -> Result<f64> {
    if prob.both_kl() {
        return Ok(kl_h_marginal(prob, log_a, log_b, f, g));
    }
    let lam = newton_translation(prob, f, g, 0.0)?;
    let ff: Vec<f64> = f.iter().map(|x| x + lam).collect();
    let gg: Vec<f64> = g.iter().map(|x| x - lam).collect();
    Ok(marginal_terms(prob, &ff, &gg))
}

/// Gradient of `H` w.r.t. `(f, g)` divided by the input weights, i.e. the
/// reweighted marginals `α̃ = ∇φ₁*(-f-λ*) α`, `β̃ = ∇φ₂*(-g+λ*) β`.
pub fn updated_marginals(prob: &UotProblem, d: &DualPair) -> Result<(Vec<f64>, Vec<f64>)> {
    let lam = lambda_star(prob, d)?;
    Ok(reweight(prob, d, lam))
}

pub(crate) fn reweight(prob: &UotProblem, d: &DualPair, lam: f64) -> (Vec<f64>, Vec<f64>) {
    let at = prob
        .alpha
        .weights()
        .iter()
        .zip(&d.f)
        .map(|(&w, &x)| {
            if w > 0.0 {
                w * prob.ent1.conj_grad(-x - lam).unwrap_or(f64::INFINITY)
            } else {
                0.0
            }
        })
        .collect();
    let bt = prob
        .beta
        .weights()
        .iter()
        .zip(&d.g)
        .map(|(&w, &x)| {
            if w > 0.0 {
                w * prob.ent2.conj_grad(-x + lam).unwrap_or(f64::INFINITY)
            } else {
                0.0
            }
        })
        .collect();
    (at, bt)
}

/// Nonnegative dense transport plan.
#[derive(Debug, Clone, PartialEq)]
pub struct DensePlan {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DensePlan {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// A plan that can be evaluated by [`eval_primal`].
pub trait Coupling {
    fn shape(&self) -> (usize, usize);
    /// Calls `visit(i, j, mass)` on every stored entry.
    fn visit(&self, visit: &mut dyn FnMut(usize, usize, f64));
}

impl Coupling for DensePlan {
    fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn visit(&self, visit: &mut dyn FnMut(usize, usize, f64)) {
        for i in 0..self.rows {
            for j in 0..self.cols {
                visit(i, j, self.get(i, j));
            }
        }
    }
}

impl Coupling for SparsePlan {
    fn shape(&self) -> (usize, usize) {
        self.shape()
    }

    fn visit(&self, visit: &mut dyn FnMut(usize, usize, f64)) {
        for e in self.entries() {
            visit(e.i, e.j, e.mass);
        }
    }
}

/// Primal objective `⟨π, C⟩ + ε KL(π | α⊗β) + D_φ₁(π₁ | α) + D_φ₂(π₂ | β)`.
pub fn eval_primal(prob: &UotProblem, plan: &dyn Coupling) -> Result<f64> {
    let (n, m) = (prob.n(), prob.m());
    if plan.shape() != (n, m) {
        return Err(Error::DimensionMismatch {
            expected: (n, m),
            found: plan.shape(),
        });
    }
    let aw = prob.alpha.weights();
    let bw = prob.beta.weights();
    let mut p1 = alloc::vec![0.0; n];
    let mut p2 = alloc::vec![0.0; m];
    let mut transport = 0.0;
    let mut ent = 0.0;
    let mut bad: Option<Error> = None;
    plan.visit(&mut |i, j, p| {
        if bad.is_some() {
            return;
        }
        if !p.is_finite() {
            bad = Some(Error::NonFinite("plan"));
            return;
        }
        if p < 0.0 {
            bad = Some(Error::NegativeWeight { index: i * m + j });
            return;
        }
        if p == 0.0 {
            return;
        }
        p1[i] += p;
        p2[j] += p;
        transport += p * prob.cost_at(i, j);
        if prob.eps > 0.0 {
            let r = aw[i] * bw[j];
            ent += if r == 0.0 {
                f64::INFINITY
            } else {
                p * libm::log(p / r) - p
            };
        }
    });
    if let Some(e) = bad {
        return Err(e);
    }
    let mut total = transport;
    if prob.eps > 0.0 {
        total += prob.eps * (ent + prob.alpha.mass() * prob.beta.mass());
    }
    total += prob.ent1.divergence(&p1, aw)?;
    total += prob.ent2.divergence(&p2, bw)?;
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::scalar_max_oracle;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn measure(rng: &mut ChaCha8Rng, n: usize, mass: f64) -> DiscreteMeasure {
        let pts: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
        let s: f64 = w.iter().sum();
        DiscreteMeasure::new(pts, w.into_iter().map(|x| x * mass / s).collect()).unwrap()
    }

    fn random_pair(rng: &mut ChaCha8Rng, n: usize, m: usize, scale: f64) -> DualPair {
        DualPair::new(
            (0..n).map(|_| rng.gen_range(-scale..scale)).collect(),
            (0..m).map(|_| rng.gen_range(-scale..scale)).collect(),
        )
    }

    fn prob(a: DiscreteMeasure, b: DiscreteMeasure, e1: Entropy, e2: Entropy, eps: f64) -> UotProblem {
        UotProblem::new(a, b, CostSpec::Power(2.0), e1, e2, eps).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / (1.0 + b.abs())
    }

    #[test]
    fn eval_f_examples() {
        let a = DiscreteMeasure::uniform(vec![0.0, 1.0]).unwrap();
        let b = DiscreteMeasure::uniform(vec![0.5, 2.0]).unwrap();
        let z = DualPair::zeros(2, 2);
        let p = prob(a.clone(), b.clone(), Entropy::Balanced, Entropy::Balanced, 0.0);
        assert_eq!(eval_f(&p, &z).unwrap(), 0.0);
        let kl = Entropy::kl(1.0).unwrap();
        let p = prob(a.clone(), b.clone(), kl, kl, 0.0);
        assert_eq!(eval_f(&p, &z).unwrap(), 0.0);
        let p = UotProblem::new(
            a,
            b,
            CostSpec::Explicit(CostMatrix::new(2, 2, vec![0.0; 4]).unwrap()),
            kl,
            kl,
            1.0,
        )
        .unwrap();
        assert_eq!(eval_f(&p, &z).unwrap(), 0.0);
    }

    #[test]
    fn eval_f_rejects_infeasible_at_eps_zero() {
        let a = DiscreteMeasure::uniform(vec![0.0]).unwrap();
        let b = DiscreteMeasure::uniform(vec![1.0]).unwrap();
        let kl = Entropy::kl(1.0).unwrap();
        let p = prob(a, b, kl, kl, 0.0);
        let d = DualPair::new(vec![0.6], vec![0.6]);
        assert!(matches!(eval_f(&p, &d), Err(Error::InfeasibleDual { .. })));
        let d = DualPair::new(vec![0.5], vec![0.5 + 5e-10]);
        assert!(eval_f(&p, &d).is_ok());
    }

    #[test]
    fn lambda_star_examples() {
        let kl = Entropy::kl(1.0).unwrap();
        let a = DiscreteMeasure::uniform(vec![0.0, 1.0]).unwrap();
        let b = DiscreteMeasure::uniform(vec![0.2, 0.4, 2.0]).unwrap();
        let p = prob(a.clone(), b, kl, kl, 0.0);
        assert!(lambda_star(&p, &DualPair::zeros(2, 3)).unwrap().abs() < 1e-15);

        let p = prob(a.clone(), a.clone(), kl, kl, 0.0);
        let g = vec![0.3, -0.7];
        let c = 1.25;
        let d = DualPair::new(g.iter().map(|x| x + c).collect(), g);
        assert!((lambda_star(&p, &d).unwrap() + c / 2.0).abs() < 1e-14);

        let p = prob(a.clone(), a, Entropy::Balanced, Entropy::Balanced, 0.0);
        assert_eq!(lambda_star(&p, &DualPair::zeros(2, 2)), Err(Error::TranslationUndefined));
    }

    #[test]
    fn berg_lambda_matches_golden_section() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let berg = Entropy::berg(1.0).unwrap();
        for _ in 0..10 {
            let a = measure(&mut rng, 4, 1.0);
            let b = measure(&mut rng, 3, 1.7);
            let p = prob(a, b, berg, berg, 0.0);
            let d = random_pair(&mut rng, 4, 3, 0.4);
            let lam = lambda_star(&p, &d).unwrap();
            let (lo, hi) = (
                -d.f.iter().copied().fold(f64::INFINITY, f64::min) - 1.0 + 1e-9,
                d.g.iter().copied().fold(f64::INFINITY, f64::min) + 1.0 - 1e-9,
            );
            // G_0 without the coupling constraint (concave in λ)
            let obj = |l: f64| marginal_terms(&p, &d.translated(l).f, &d.translated(l).g);
            let (arg, _) = scalar_max_oracle(obj, lo, hi, 1e-10).unwrap();
            assert!((lam - arg).abs() < 1e-8, "{lam} vs {arg}");
        }
    }

    #[test]
    fn eval_g_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let kl = Entropy::kl(1.0).unwrap();
        let a = measure(&mut rng, 5, 1.0);
        let b = measure(&mut rng, 4, 2.0);
        let p = prob(a.clone(), b.clone(), kl, kl, 0.5);
        let d = random_pair(&mut rng, 5, 4, 0.3);
        assert_eq!(eval_g(&p, &d, 0.0).unwrap(), eval_f(&p, &d).unwrap());
        let lam = lambda_star(&p, &d).unwrap();
        let best = eval_g(&p, &d, lam).unwrap();
        assert!(best >= eval_g(&p, &d, lam + 0.1).unwrap());
        assert!(best >= eval_g(&p, &d, lam - 0.1).unwrap());

        let b = b.scaled(a.mass() / b.mass());
        let pb = prob(a, b, Entropy::Balanced, Entropy::Balanced, 0.5);
        let base = eval_g(&pb, &d, 0.0).unwrap();
        for k in 0..11 {
            let l = -5.0 + k as f64;
            assert!(rel(eval_g(&pb, &d, l).unwrap(), base) < 1e-12);
        }
    }

    #[test]
    fn eval_h_examples() {
        let kl = Entropy::kl(1.0).unwrap();
        let a = DiscreteMeasure::new(vec![0.0], vec![4.0]).unwrap();
        let b = DiscreteMeasure::new(vec![0.0], vec![1.0]).unwrap();
        let p = prob(a, b, kl, kl, 0.0);
        assert!((eval_h(&p, &DualPair::zeros(1, 1)).unwrap() - 1.0).abs() < 1e-14);

        let a = DiscreteMeasure::new(vec![0.0, 1.0], vec![1.0, 2.0]).unwrap();
        let b = DiscreteMeasure::new(vec![0.5], vec![3.0]).unwrap();
        let p = prob(a, b, kl, kl, 0.0);
        assert!(eval_h(&p, &DualPair::zeros(2, 1)).unwrap().abs() < 1e-14);
    }

    #[test]
    fn eval_h_matches_lambda_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = prob(
            measure(&mut rng, 6, 1.0),
            measure(&mut rng, 5, 1.5),
            Entropy::kl(2.0).unwrap(),
            Entropy::kl(1.0).unwrap(),
            0.3,
        );
        let d = random_pair(&mut rng, 6, 5, 0.2);
        let h = eval_h(&p, &d).unwrap();
        // grid on [-20, 20] with step 1e-4, then a local refinement
        let mut best = (f64::NEG_INFINITY, 0.0);
        let mut l = -20.0;
        while l <= 20.0 {
            let v = eval_g(&p, &d, l).unwrap();
            if v > best.0 {
                best = (v, l);
            }
            l += 1e-4;
        }
        let (_, refined) =
            scalar_max_oracle(|l| eval_g(&p, &d, l).unwrap(), best.1 - 1e-4, best.1 + 1e-4, 1e-12).unwrap();
        assert!((h - refined).abs() < 1e-6, "{h} vs {refined}");
        assert!(h >= best.0 - 1e-12);
    }

    #[test]
    fn h_is_translation_invariant_and_equals_g_at_lambda_star() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for ents in [
            (Entropy::kl(0.5).unwrap(), Entropy::kl(3.0).unwrap()),
            (Entropy::berg(1.0).unwrap(), Entropy::kl(1.0).unwrap()),
            (Entropy::berg(2.0).unwrap(), Entropy::berg(0.7).unwrap()),
        ] {
            for eps in [0.0, 0.2] {
                let p = prob(measure(&mut rng, 5, 1.0), measure(&mut rng, 4, 2.0), ents.0, ents.1, eps);
                // feasible for ε = 0: costs are >= 0
                let d = DualPair::new(
                    (0..5).map(|_| rng.gen_range(-0.3..0.0)).collect(),
                    (0..4).map(|_| rng.gen_range(-0.3..0.0)).collect(),
                );
                let h = eval_h(&p, &d).unwrap();
                let lam = lambda_star(&p, &d).unwrap();
                assert!(rel(eval_g(&p, &d, lam).unwrap(), h) < 1e-9);
                for _ in 0..5 {
                    let mu = rng.gen_range(-0.2..0.2);
                    let ht = eval_h(&p, &d.translated(mu)).unwrap();
                    assert!(rel(ht, h) < 1e-9, "{ents:?} {ht} vs {h}");
                }
            }
        }
    }

    #[test]
    fn updated_marginal_examples() {
        let kl = Entropy::kl(1.0).unwrap();
        let a = DiscreteMeasure::new(vec![0.0, 1.0], vec![0.3, 0.7]).unwrap();
        let b = DiscreteMeasure::new(vec![0.0, 0.5, 2.0], vec![0.2, 0.2, 0.6]).unwrap();
        let p = prob(a.clone(), b.clone(), kl, kl, 0.0);
        let (at, bt) = updated_marginals(&p, &DualPair::zeros(2, 3)).unwrap();
        for (x, y) in at.iter().zip(a.weights()) {
            assert!((x - y).abs() < 1e-15);
        }
        for (x, y) in bt.iter().zip(b.weights()) {
            assert!((x - y).abs() < 1e-15);
        }

        let e = core::f64::consts::E;
        let a = DiscreteMeasure::new(vec![0.0], vec![1.0]).unwrap();
        let b = DiscreteMeasure::new(vec![1.0], vec![e * e]).unwrap();
        let p = prob(a, b, kl, kl, 0.0);
        let z = DualPair::zeros(1, 1);
        assert!((lambda_star(&p, &z).unwrap() + 1.0).abs() < 1e-14);
        let (at, bt) = updated_marginals(&p, &z).unwrap();
        assert!((at[0] - e).abs() < 1e-13 && (bt[0] - e).abs() < 1e-13);
    }

    #[test]
    fn berg_updated_marginals_have_equal_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let berg = Entropy::berg(1.0).unwrap();
        for _ in 0..20 {
            let p = prob(measure(&mut rng, 6, 1.0), measure(&mut rng, 7, 2.5), berg, berg, 0.0);
            let d = random_pair(&mut rng, 6, 7, 0.5);
            let (at, bt) = updated_marginals(&p, &d).unwrap();
            let (ma, mb): (f64, f64) = (at.iter().sum(), bt.iter().sum());
            assert!((ma - mb).abs() <= 1e-9 * ma);
        }
    }

    #[test]
    fn primal_examples() {
        let a = DiscreteMeasure::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let b = DiscreteMeasure::new(vec![0.0, 2.0], vec![0.25, 0.75]).unwrap();
        let plan = DensePlan::new(2, 2, vec![0.25, 0.25, 0.0, 0.5]).unwrap();
        let p = prob(a.clone(), b.clone(), Entropy::Balanced, Entropy::Balanced, 0.0);
        let want = 0.25 * 4.0 + 0.5 * 1.0;
        assert!((eval_primal(&p, &plan).unwrap() - want).abs() < 1e-15);

        let rho = 0.7;
        let kl = Entropy::kl(rho).unwrap();
        let p = prob(a, b, kl, kl, 0.0);
        let zero = DensePlan::new(2, 2, vec![0.0; 4]).unwrap();
        assert!((eval_primal(&p, &zero).unwrap() - 2.0 * rho).abs() < 1e-15);

        let neg = DensePlan::new(2, 2, vec![0.0, -1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(eval_primal(&p, &neg), Err(Error::NegativeWeight { .. })));
    }

    #[test]
    fn weak_duality_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for eps in [0.0, 0.1, 1.0] {
            for _ in 0..20 {
                let kl1 = Entropy::kl(rng.gen_range(0.1..3.0)).unwrap();
                let kl2 = Entropy::kl(rng.gen_range(0.1..3.0)).unwrap();
                let p = prob(measure(&mut rng, 4, 1.0), measure(&mut rng, 3, 1.3), kl1, kl2, eps);
                let plan = DensePlan::new(4, 3, (0..12).map(|_| rng.gen_range(0.0..0.3)).collect()).unwrap();
                let d = DualPair::new(
                    (0..4).map(|_| rng.gen_range(-0.5..0.0)).collect(),
                    (0..3).map(|_| rng.gen_range(-0.5..0.0)).collect(),
                );
                let primal = eval_primal(&p, &plan).unwrap();
                let dual = eval_f(&p, &d).unwrap();
                assert!(primal - dual >= -1e-8);
            }
        }
    }
}
