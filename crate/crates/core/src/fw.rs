//! Frank-Wolfe maximization of `H₀` for unregularized 1-D UOT.
//!
//! The gradient of `H₀` at `(f̄, ḡ)` is the pair of reweighted marginals
//! `(α̃, β̃)`, which have equal mass. The linear oracle is therefore a balanced
//! 1-D transport problem between `α̃` and `β̃`, solved exactly by the
//! north-west sweep. Its plan doubles as a primal certificate: its marginals
//! are `α̃` and `β̃`, so `eval_primal(π) - H₀` bounds the suboptimality.

use alloc::vec::Vec;

use crate::certify::{assemble_certificate, Certificate};
use crate::duality::{dual_violation, eval_primal, h0_unchecked, lambda_star_from, reweight, DualPair, UotProblem};
use crate::lse::log_weights;
use crate::ot1d::{solve_ot_1d, SparsePlan};
use crate::{Clock, Error, Result};

/// Number of ternary-search rounds in [`line_search_h0`].
pub const LINE_SEARCH_ITERS: usize = 60;
/// Atoms closer than this in sup-distance are merged.
pub const ATOM_MERGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepRule {
    /// `γ_t = 2 / (2 + t)`.
    Harmonic,
    /// Exact line search on `[0, 1]`.
    LineSearch,
    /// Pairwise steps between the new vertex and an away atom.
    Pairwise,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FwConfig {
    pub step: StepRule,
    pub max_iters: usize,
    /// Stop once the primal-dual gap falls below this value.
    pub gap_tol: f64,
}

impl Default for FwConfig {
    fn default() -> Self {
        Self {
            step: StepRule::LineSearch,
            max_iters: 5000,
            gap_tol: 1e-6,
        }
    }
}

impl FwConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gap_tol > 0.0) {
            return Err(Error::InvalidParameter("gap_tol must be > 0"));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FwTraceRecord {
    pub iter: usize,
    pub h0: f64,
    pub fw_gap: f64,
    pub pd_gap: f64,
    /// `‖f_t - f*‖_∞` of the translated iterate, when a reference is given.
    pub err_f: Option<f64>,
    pub wall_ns: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FwReport {
    /// Last iterate translated by `λ*`.
    pub final_pair: DualPair,
    pub h0: f64,
    /// Linear-oracle plan at the last iterate.
    pub plan: SparsePlan,
    pub certificate: Certificate,
    pub iterations: usize,
    pub trace: Vec<FwTraceRecord>,
    pub converged: bool,
    /// Active atoms at exit (pairwise steps only).
    pub atoms: Option<usize>,
}

impl FwReport {
    pub fn err_f(&self) -> Vec<f64> {
        self.trace.iter().filter_map(|r| r.err_f).collect()
    }
}

/// Convex weights over feasible dual pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomStore {
    atoms: Vec<DualPair>,
    weights: Vec<f64>,
}

impl AtomStore {
    pub fn singleton(atom: DualPair) -> Self {
        Self {
            atoms: alloc::vec![atom],
            weights: alloc::vec![1.0],
        }
    }

    /// Weights must be nonnegative with unit sum (within 1e-12).
    pub fn new(atoms: Vec<DualPair>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyStore);
        }
        if atoms.len() != weights.len() {
            return Err(Error::LengthMismatch {
                expected: atoms.len(),
                found: weights.len(),
            });
        }
        if let Some(k) = weights.iter().position(|w| !(*w >= 0.0)) {
            return Err(Error::NegativeWeight { index: k });
        }
        if libm::fabs(weights.iter().sum::<f64>() - 1.0) > 1e-12 {
            return Err(Error::InvalidParameter("atom weights must sum to 1"));
        }
        Ok(Self { atoms, weights })
    }

    pub fn atoms(&self) -> &[DualPair] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `Σ_k w_k · atom_k`.
    pub fn iterate(&self) -> DualPair {
        let a0 = &self.atoms[0];
        let mut out = DualPair::zeros(a0.f.len(), a0.g.len());
        for (a, &w) in self.atoms.iter().zip(&self.weights) {
            axpy(&mut out, w, a);
        }
        out
    }

    fn find(&self, v: &DualPair) -> Option<usize> {
        self.atoms.iter().position(|a| {
            libm::fabs(a.f[0] - v.f[0]) < ATOM_MERGE_TOL && a.sup_dist(v) < ATOM_MERGE_TOL
        })
    }

    /// Moves weight `gamma` from atom `away` to `v`; atoms left without weight are dropped.
    fn transfer(&mut self, away: usize, v: DualPair, gamma: f64) {
        let target = match self.find(&v) {
            Some(k) => k,
            None => {
                self.atoms.push(v);
                self.weights.push(0.0);
                self.atoms.len() - 1
            }
        };
        if target == away {
            return;
        }
        let moved = gamma.min(self.weights[away]);
        self.weights[target] += moved;
        self.weights[away] -= moved;
        if self.weights[away] <= 0.0 {
            self.atoms.swap_remove(away);
            self.weights.swap_remove(away);
        }
    }
}

fn axpy(out: &mut DualPair, w: f64, a: &DualPair) {
    out.f.iter_mut().zip(&a.f).for_each(|(o, x)| *o += w * x);
    out.g.iter_mut().zip(&a.g).for_each(|(o, x)| *o += w * x);
}

/// `(1 - γ) x + γ y`.
fn lerp(x: &DualPair, y: &DualPair, gamma: f64) -> DualPair {
    let mix = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p + gamma * (q - p)).collect();
    DualPair::new(mix(&x.f, &y.f), mix(&x.g, &y.g))
}

struct Oracle<'a> {
    prob: &'a UotProblem,
    log_a: Vec<f64>,
    log_b: Vec<f64>,
}

/// Gradient and linear-oracle output at one iterate.
struct Linearization {
    lam: f64,
    alpha_t: Vec<f64>,
    beta_t: Vec<f64>,
    vertex: DualPair,
    plan: SparsePlan,
}

impl<'a> Oracle<'a> {
    fn new(prob: &'a UotProblem) -> Result<Self> {
        if prob.eps != 0.0 {
            return Err(Error::InvalidParameter("frank-wolfe requires eps = 0"));
        }
        if !(prob.ent1.has_strictly_convex_conj() && prob.ent2.has_strictly_convex_conj()) {
            return Err(Error::Unsupported("frank-wolfe requires kl or berg entropies"));
        }
        Ok(Self {
            prob,
            log_a: log_weights(prob.alpha.weights()),
            log_b: log_weights(prob.beta.weights()),
        })
    }

    fn h0(&self, d: &DualPair) -> Result<f64> {
        h0_unchecked(self.prob, &self.log_a, &self.log_b, &d.f, &d.g)
    }

    fn linearize(&self, d: &DualPair, warm: f64) -> Result<Linearization> {
        let lam = lambda_star_from(self.prob, d, warm)?;
        let (alpha_t, beta_t) = reweight(self.prob, d, lam);
        let a = self.prob.alpha.reweighted(alpha_t.clone())?;
        let b = self.prob.beta.reweighted(beta_t.clone())?;
        let (plan, vertex) = solve_ot_1d(&a, &b, &self.prob.cost)?;
        Ok(Linearization {
            lam,
            alpha_t,
            beta_t,
            vertex,
            plan,
        })
    }
}

fn dot(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// `⟨∇H₀, d⟩` for a gradient `(α̃, β̃)`.
fn grad_dot(lin: &Linearization, d: &DualPair) -> f64 {
    dot(&lin.alpha_t, &d.f) + dot(&lin.beta_t, &d.g)
}

/// Maximizer on `[0, 1]` of a concave function given its derivative, by
/// bisection on the sign of the slope.
fn bisect_slope(mut slope: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
    if slope(1.0)? >= 0.0 {
        return Ok(1.0);
    }
    if slope(0.0)? <= 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..LINE_SEARCH_ITERS {
        let mid = 0.5 * (lo + hi);
        if slope(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `argmax_{γ∈[0,1]} H₀((1-γ) current + γ target)`.
///
/// Bisects on the sign of `⟨∇H₀, target - current⟩` along the segment,
/// which stays reliable where `H₀` itself is flat to rounding. The bracket
/// after [`LINE_SEARCH_ITERS`] halvings is below `1e-18`.
pub fn line_search_h0(prob: &UotProblem, current: &DualPair, target: &DualPair) -> Result<f64> {
    current.check(prob.n(), prob.m())?;
    target.check(prob.n(), prob.m())?;
    let oracle = Oracle::new(prob)?;
    line_search(&oracle, current, target)
}

fn line_search(oracle: &Oracle<'_>, current: &DualPair, target: &DualPair) -> Result<f64> {
    let dir = DualPair::new(
        target.f.iter().zip(&current.f).map(|(a, b)| a - b).collect(),
        target.g.iter().zip(&current.g).map(|(a, b)| a - b).collect(),
    );
    let mut warm = 0.0;
    bisect_slope(|gamma| {
        let y = lerp(current, target, gamma);
        let lam = lambda_star_from(oracle.prob, &y, warm)?;
        warm = lam;
        let (at, bt) = reweight(oracle.prob, &y, lam);
        Ok(dot(&at, &dir.f) + dot(&bt, &dir.g))
    })
}

/// Away atom: smallest `⟨∇H₀, s⟩` among stored atoms, ties to the lowest index.
fn away_atom(store: &AtomStore, lin: &Linearization) -> usize {
    let mut best = (0, f64::INFINITY);
    for (k, a) in store.atoms.iter().enumerate() {
        let v = grad_dot(lin, a);
        if v < best.1 {
            best = (k, v);
        }
    }
    best.0
}

/// Returns the new iterate and the step taken.
fn pairwise_update(
    oracle: &Oracle<'_>,
    store: &mut AtomStore,
    x: &DualPair,
    lin: &Linearization,
) -> Result<DualPair> {
    let away = away_atom(store, lin);
    let w = store.weights[away];
    let s = &store.atoms[away];
    let mut far = x.clone();
    axpy(&mut far, w, &lin.vertex);
    axpy(&mut far, -w, s);
    let t = line_search(oracle, x, &far)?;
    let gamma = t * w;
    let next = if t == 1.0 { far } else { lerp(x, &far, t) };
    store.transfer(away, lin.vertex.clone(), gamma);
    Ok(next)
}

/// One pairwise Frank-Wolfe step on a store of feasible atoms.
///
/// Weight moves from the away atom to the current linear-oracle vertex, with
/// the amount chosen by line search on `[0, w_away]`.
pub fn pfw_step(prob: &UotProblem, store: &AtomStore) -> Result<AtomStore> {
    if store.is_empty() {
        return Err(Error::EmptyStore);
    }
    let oracle = Oracle::new(prob)?;
    let x = store.iterate();
    x.check(prob.n(), prob.m())?;
    let lin = oracle.linearize(&x, 0.0)?;
    let mut next = store.clone();
    pairwise_update(&oracle, &mut next, &x, &lin)?;
    Ok(next)
}

/// Feasible starting point: zeros when `C ≥ 0`, otherwise `f_i = min_j C_ij`, `g = 0`.
pub fn default_init(prob: &UotProblem) -> DualPair {
    let (n, m) = (prob.n(), prob.m());
    let row_min: Vec<f64> = (0..n)
        .map(|i| (0..m).map(|j| prob.cost_at(i, j)).fold(f64::INFINITY, f64::min))
        .collect();
    if row_min.iter().all(|&c| c >= 0.0) {
        DualPair::zeros(n, m)
    } else {
        DualPair::new(row_min, alloc::vec![0.0; m])
    }
}

/// Frank-Wolfe on `H₀` from a feasible `init` (`f ⊕ g ≤ C`).
///
/// Every iteration linearizes at the current iterate, records `H₀`, the FW
/// gap and the primal-dual gap of the oracle plan, and stops once the latter
/// is below `gap_tol`.
pub fn fw_solve<C: Clock>(
    prob: &UotProblem,
    config: &FwConfig,
    init: &DualPair,
    reference: Option<&DualPair>,
    clock: &mut C,
) -> Result<FwReport> {
    config.validate()?;
    let oracle = Oracle::new(prob)?;
    init.check(prob.n(), prob.m())?;
    if let Some(r) = reference {
        r.check(prob.n(), prob.m())?;
    }
    let viol = dual_violation(prob, init);
    if viol > crate::duality::DUAL_FEASIBILITY_TOL {
        return Err(Error::InfeasibleDual { violation: viol });
    }
    let start = clock.now_ns();
    let mut x = init.clone();
    let mut store = (config.step == StepRule::Pairwise).then(|| AtomStore::singleton(init.clone()));
    let mut trace = Vec::new();
    let mut warm = 0.0;
    let mut converged = false;
    let mut last = None;

    for iter in 0..config.max_iters {
        let lin = oracle.linearize(&x, warm)?;
        warm = lin.lam;
        let h0 = oracle.h0(&x)?;
        let fw_gap = grad_dot(&lin, &lin.vertex) - grad_dot(&lin, &x);
        let primal = eval_primal(prob, &lin.plan)?;
        let pd_gap = primal - h0;
        let err_f = reference.map(|r| {
            x.f.iter()
                .zip(&r.f)
                .map(|(a, b)| libm::fabs(a + lin.lam - b))
                .fold(0.0, f64::max)
        });
        trace.push(FwTraceRecord {
            iter,
            h0,
            fw_gap,
            pd_gap,
            err_f,
            wall_ns: clock.now_ns().saturating_sub(start),
        });
        if pd_gap < config.gap_tol {
            converged = true;
            last = Some((lin, h0, primal));
            break;
        }
        x = match config.step {
            StepRule::Harmonic => lerp(&x, &lin.vertex, 2.0 / (2.0 + iter as f64)),
            StepRule::LineSearch => {
                let g = line_search(&oracle, &x, &lin.vertex)?;
                lerp(&x, &lin.vertex, g)
            }
            StepRule::Pairwise => {
                let s = store.as_mut().expect("pairwise store");
                pairwise_update(&oracle, s, &x, &lin)?
            }
        };
        last = Some((lin, h0, primal));
    }

    // report against the final iterate when the budget ran out
    let (lin, h0, primal) = match last {
        Some(l) if converged => l,
        _ => {
            let lin = oracle.linearize(&x, warm)?;
            let h0 = oracle.h0(&x)?;
            let primal = eval_primal(prob, &lin.plan)?;
            (lin, h0, primal)
        }
    };
    let viol = dual_violation(prob, &x).max(0.0);
    let certificate = assemble_certificate(primal, h0, viol, config.gap_tol);
    Ok(FwReport {
        final_pair: x.translated(lin.lam),
        h0,
        plan: lin.plan,
        certificate,
        iterations: trace.len(),
        trace,
        converged,
        atoms: store.map(|s| s.len()),
    })
}
