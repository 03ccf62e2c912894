//! 1-D barycenters through multimarginal transport.
//!
//! With squared Euclidean ground cost, the barycenter of `α_1, …, α_K` with
//! weights `ω` is read off an optimal multimarginal plan for the cost
//! `Cc(x_1, …, x_K) = Σ_k ω_k (x_k - B)²`, `B = Σ_k ω_k x_k`. In 1-D this cost
//! is submodular, so a monotone sweep solves the balanced problem exactly.
//! The unbalanced problem (KL with `ρ_k = ω_k ρ`) is solved by Frank-Wolfe on
//! the translation-invariant dual, whose linear oracle is the balanced sweep.

use alloc::vec::Vec;

use crate::certify::{assemble_certificate, Certificate};
use crate::duality::log_mean_exp;
use crate::entropies::Entropy;
use crate::fw::{FwConfig, FwTraceRecord, StepRule, ATOM_MERGE_TOL, LINE_SEARCH_ITERS};
use crate::lse::log_weights;
use crate::measures::DiscreteMeasure;
use crate::ot1d::MASS_BALANCE_TOL;
use crate::{Clock, Error, Result};

/// Largest `Π N_k` for which dual feasibility is checked on every tuple.
pub const EXHAUSTIVE_LIMIT: usize = 100_000;

/// `K ≥ 2` measures, weights `ω` on the simplex, and `ρ` (`None` for balanced marginals).
#[derive(Debug, Clone)]
pub struct BarycenterProblem {
    pub inputs: Vec<DiscreteMeasure>,
    pub weights: Vec<f64>,
    pub rho: Option<f64>,
}

impl BarycenterProblem {
    pub fn new(inputs: Vec<DiscreteMeasure>, weights: Vec<f64>, rho: Option<f64>) -> Result<Self> {
        if inputs.len() < 2 {
            return Err(Error::InvalidParameter("at least two input measures are required"));
        }
        if weights.len() != inputs.len() {
            return Err(Error::LengthMismatch {
                expected: inputs.len(),
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter("barycenter weights must be > 0"));
        }
        if libm::fabs(weights.iter().sum::<f64>() - 1.0) > 1e-12 {
            return Err(Error::InvalidParameter("barycenter weights must sum to 1"));
        }
        if let Some(r) = rho {
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::InvalidParameter("rho must be > 0"));
            }
        }
        Ok(Self { inputs, weights, rho })
    }

    /// Barycenter with equal weights `1/K`.
    pub fn uniform(inputs: Vec<DiscreteMeasure>, rho: Option<f64>) -> Result<Self> {
        let k = inputs.len().max(1);
        Self::new(inputs, alloc::vec![1.0 / k as f64; k], rho)
    }

    pub fn k(&self) -> usize {
        self.inputs.len()
    }

    /// `ρ_k = ω_k ρ`.
    pub fn rhos(&self) -> Option<Vec<f64>> {
        self.rho.map(|r| self.weights.iter().map(|w| w * r).collect())
    }

    /// `Cc` at an index tuple.
    pub fn cost(&self, idx: &[usize]) -> f64 {
        tuple_cost(&self.inputs, &self.weights, idx)
    }
}

/// `(Σ_k ω_k (x_k - B)², B)` with `B = Σ_k ω_k x_k`.
///
/// `B` is accumulated relative to `x_1`, so equal points give exactly that point.
pub fn multimarginal_cost(points: &[f64], w: &[f64]) -> (f64, f64) {
    let x0 = points[0];
    let b = x0 + points.iter().zip(w).map(|(x, wk)| wk * (x - x0)).sum::<f64>();
    let c = points.iter().zip(w).map(|(x, wk)| wk * (x - b) * (x - b)).sum();
    (c, b)
}

fn tuple_cost(inputs: &[DiscreteMeasure], w: &[f64], idx: &[usize]) -> f64 {
    let mut pts = [0.0f64; 16];
    if idx.len() <= pts.len() {
        for (k, &i) in idx.iter().enumerate() {
            pts[k] = inputs[k].points()[i];
        }
        multimarginal_cost(&pts[..idx.len()], w).0
    } else {
        let pts: Vec<f64> = idx.iter().enumerate().map(|(k, &i)| inputs[k].points()[i]).collect();
        multimarginal_cost(&pts, w).0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiEntry {
    pub idx: Vec<usize>,
    pub mass: f64,
}

/// Multimarginal plan stored as a monotone list of index tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPlan {
    dims: Vec<usize>,
    entries: Vec<MultiEntry>,
}

impl MultiPlan {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn entries(&self) -> &[MultiEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.entries.iter().map(|e| e.mass).sum()
    }

    /// The `K` marginals `γ_k`.
    pub fn marginals(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = self.dims.iter().map(|&n| alloc::vec![0.0; n]).collect();
        for e in &self.entries {
            for (k, &i) in e.idx.iter().enumerate() {
                out[k][i] += e.mass;
            }
        }
        out
    }

    /// Every coordinate nondecreasing along the entries, no repeated tuple.
    pub fn is_monotone(&self) -> bool {
        self.entries.windows(2).all(|w| {
            w[0].idx.iter().zip(&w[1].idx).all(|(a, b)| a <= b) && w[0].idx != w[1].idx
        })
    }

    /// `⟨γ, Cc⟩`.
    pub fn cost(&self, c: impl Fn(&[usize]) -> f64) -> f64 {
        self.entries.iter().map(|e| e.mass * c(&e.idx)).sum()
    }
}

/// One potential per marginal.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiDual {
    pub potentials: Vec<Vec<f64>>,
}

impl MultiDual {
    pub fn new(potentials: Vec<Vec<f64>>) -> Self {
        Self { potentials }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        Self {
            potentials: dims.iter().map(|&n| alloc::vec![0.0; n]).collect(),
        }
    }

    /// `Σ_k ⟨w_k, f_k⟩`.
    pub fn value(&self, weights: &[&[f64]]) -> f64 {
        self.potentials
            .iter()
            .zip(weights)
            .map(|(f, w)| f.iter().zip(w.iter()).map(|(a, b)| a * b).sum::<f64>())
            .sum()
    }

    /// `f_k + λ_k` for every `k`.
    pub fn translated(&self, lam: &[f64]) -> Self {
        Self {
            potentials: self
                .potentials
                .iter()
                .zip(lam)
                .map(|(f, l)| f.iter().map(|x| x + l).collect())
                .collect(),
        }
    }

    fn check(&self, dims: &[usize]) -> Result<()> {
        if self.potentials.len() != dims.len() {
            return Err(Error::LengthMismatch {
                expected: dims.len(),
                found: self.potentials.len(),
            });
        }
        for (f, &n) in self.potentials.iter().zip(dims) {
            if f.len() != n {
                return Err(Error::LengthMismatch { expected: n, found: f.len() });
            }
            if f.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("multimarginal potentials"));
            }
        }
        Ok(())
    }

    fn flatten(&self) -> Vec<f64> {
        self.potentials.iter().flatten().copied().collect()
    }

    fn unflatten(v: &[f64], dims: &[usize]) -> Self {
        let mut out = Vec::with_capacity(dims.len());
        let mut at = 0;
        for &n in dims {
            out.push(v[at..at + n].to_vec());
            at += n;
        }
        Self { potentials: out }
    }
}

fn dims_of(inputs: &[DiscreteMeasure]) -> Vec<usize> {
    inputs.iter().map(|m| m.len()).collect()
}

/// Monotone multimarginal sweep on `K` weight vectors of equal mass.
///
/// At each step the coordinate with the least remaining mass (lowest index on
/// ties, final atoms excluded) is exhausted and advanced. Potentials start at
/// `f_{1,1} = Cc(first tuple)`, `f_{k,1} = 0`, and the newly entered
/// coordinate takes `f_{p,i_p} = Cc(tuple) - Σ_{k≠p} f_{k,i_k}`.
pub fn solve_mot_1d_with(
    weights: &[&[f64]],
    cost: impl Fn(&[usize]) -> f64,
) -> Result<(MultiPlan, MultiDual)> {
    let k = weights.len();
    if k == 0 {
        return Err(Error::InvalidParameter("no marginals"));
    }
    if weights.iter().any(|w| w.is_empty()) {
        return Err(Error::EmptyMeasure);
    }
    let masses: Vec<f64> = weights.iter().map(|w| w.iter().sum()).collect();
    let (lo, hi) = masses
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &m| (a.min(m), b.max(m)));
    if !(lo > 0.0) {
        return Err(Error::ZeroMass);
    }
    if hi - lo > MASS_BALANCE_TOL * hi {
        return Err(Error::UnbalancedMasses { left: lo, right: hi });
    }
    let dims: Vec<usize> = weights.iter().map(|w| w.len()).collect();
    let mut f: Vec<Vec<f64>> = dims.iter().map(|&n| alloc::vec![0.0; n]).collect();
    let mut idx = alloc::vec![0usize; k];
    let mut rem: Vec<f64> = weights.iter().map(|w| w[0]).collect();
    let mut entries = Vec::new();
    f[0][0] = cost(&idx);
    loop {
        let p = (0..k)
            .filter(|&q| idx[q] + 1 < dims[q])
            .fold(None, |best: Option<usize>, q| match best {
                Some(b) if rem[b] <= rem[q] => Some(b),
                _ => Some(q),
            });
        let Some(p) = p else {
            let last = rem.iter().copied().fold(f64::INFINITY, f64::min).max(0.0);
            if last > 0.0 {
                entries.push(MultiEntry {
                    idx: idx.clone(),
                    mass: last,
                });
            }
            break;
        };
        let m = rem[p];
        if m > 0.0 {
            entries.push(MultiEntry {
                idx: idx.clone(),
                mass: m,
            });
        }
        for r in rem.iter_mut() {
            *r = (*r - m).max(0.0);
        }
        idx[p] += 1;
        rem[p] = weights[p][idx[p]];
        let others: f64 = (0..k).filter(|&q| q != p).map(|q| f[q][idx[q]]).sum();
        f[p][idx[p]] = cost(&idx) - others;
    }
    Ok((MultiPlan { dims, entries }, MultiDual::new(f)))
}

/// [`solve_mot_1d_with`] for the barycentric cost of sorted, equal-mass inputs.
pub fn solve_mot_1d(inputs: &[DiscreteMeasure], w: &[f64]) -> Result<(MultiPlan, MultiDual)> {
    if inputs.len() != w.len() {
        return Err(Error::LengthMismatch {
            expected: inputs.len(),
            found: w.len(),
        });
    }
    if inputs.iter().any(|m| m.points().windows(2).any(|p| p[0] >= p[1])) {
        return Err(Error::Unsorted);
    }
    let ws: Vec<&[f64]> = inputs.iter().map(|m| m.weights()).collect();
    solve_mot_1d_with(&ws, |idx| tuple_cost(inputs, w, idx))
}

/// `max |Σ_k f_{k,i_k} - Cc(i)|` over the plan's support.
pub fn support_slack(plan: &MultiPlan, d: &MultiDual, cost: impl Fn(&[usize]) -> f64) -> f64 {
    plan.entries()
        .iter()
        .map(|e| {
            let s: f64 = e.idx.iter().enumerate().map(|(k, &i)| d.potentials[k][i]).sum();
            libm::fabs(s - cost(&e.idx))
        })
        .fold(0.0, f64::max)
}

/// `max_i Σ_k f_{k,i_k} - Cc(i)` over every index tuple, or `None` when
/// `Π N_k` exceeds [`EXHAUSTIVE_LIMIT`].
pub fn exhaustive_dual_violation(d: &MultiDual, cost: impl Fn(&[usize]) -> f64) -> Option<f64> {
    let dims: Vec<usize> = d.potentials.iter().map(|f| f.len()).collect();
    let total = dims.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n))?;
    if total > EXHAUSTIVE_LIMIT || total == 0 {
        return None;
    }
    let k = dims.len();
    let mut idx = alloc::vec![0usize; k];
    let mut worst = f64::NEG_INFINITY;
    loop {
        let s: f64 = idx.iter().enumerate().map(|(q, &i)| d.potentials[q][i]).sum();
        worst = worst.max(s - cost(&idx));
        let mut q = 0;
        loop {
            if q == k {
                return Some(worst);
            }
            idx[q] += 1;
            if idx[q] < dims[q] {
                break;
            }
            idx[q] = 0;
            q += 1;
        }
    }
}

/// Optimal translations `λ` (summing to zero) of KL multimarginal potentials.
///
/// With `ρ_k = ω_k ρ` and `q_k = log⟨α_k, e^{-f_k/ρ_k}⟩`,
/// `λ_i = ρ_i q_i - (ρ_i / Σρ) Σ_k ρ_k q_k`; the translated marginals
/// `e^{-(f_k+λ_k)/ρ_k} α_k` then share one mass.
pub fn multimarginal_lambda(d: &MultiDual, inputs: &[DiscreteMeasure], w: &[f64], rho: f64) -> Result<Vec<f64>> {
    d.check(&dims_of(inputs))?;
    if inputs.iter().any(|m| !(m.mass() > 0.0)) {
        return Err(Error::ZeroMass);
    }
    let logs: Vec<Vec<f64>> = inputs.iter().map(|m| log_weights(m.weights())).collect();
    Ok(mm_lambda(d, &logs, w, rho).0)
}

/// `(λ, log μ)` where `μ` is the common translated mass.
fn mm_lambda(d: &MultiDual, logs: &[Vec<f64>], w: &[f64], rho: f64) -> (Vec<f64>, f64) {
    let rk: Vec<f64> = w.iter().map(|x| x * rho).collect();
    let q: Vec<f64> = d
        .potentials
        .iter()
        .zip(logs)
        .zip(&rk)
        .map(|((f, lw), &r)| log_mean_exp(lw, f, r))
        .collect();
    let rtot: f64 = rk.iter().sum();
    let s: f64 = rk.iter().zip(&q).map(|(r, q)| r * q).sum();
    let lam = rk.iter().zip(&q).map(|(r, q)| r * q - r / rtot * s).collect();
    (lam, s / rtot)
}

/// `e^{-(f_k + λ_k)/ρ_k} α_k` for every `k`.
fn translated_marginals(d: &MultiDual, inputs: &[DiscreteMeasure], lam: &[f64], rk: &[f64]) -> Vec<Vec<f64>> {
    d.potentials
        .iter()
        .zip(inputs)
        .zip(lam.iter().zip(rk))
        .map(|((f, m), (l, r))| {
            f.iter()
                .zip(m.weights())
                .map(|(x, &a)| if a > 0.0 { a * libm::exp(-(x + l) / r) } else { 0.0 })
                .collect()
        })
        .collect()
}

/// Translation-invariant dual `H(f) = Σ_k ρ_k m(α_k) - Σ_k ρ_k · μ(f)`.
fn mm_h(p: &BarycenterProblem, logs: &[Vec<f64>], rho: f64, d: &MultiDual) -> f64 {
    let (_, log_mu) = mm_lambda(d, logs, &p.weights, rho);
    let base: f64 = p.inputs.iter().zip(&p.weights).map(|(m, w)| w * rho * m.mass()).sum();
    base - rho * libm::exp(log_mu)
}

/// `⟨γ, Cc⟩ + Σ_k ρ_k KL(γ_k | α_k)`.
pub fn barycenter_primal(p: &BarycenterProblem, plan: &MultiPlan) -> Result<f64> {
    let rho = p.rho.ok_or(Error::Unsupported("primal requires kl marginals"))?;
    let mut total = plan.cost(|idx| p.cost(idx));
    for ((g, m), w) in plan.marginals().iter().zip(&p.inputs).zip(&p.weights) {
        total += Entropy::kl(w * rho)?.divergence(g, m.weights())?;
    }
    Ok(total)
}

/// Balanced barycenter problem: the sweep on the inputs themselves.
pub fn balanced_barycenter(p: &BarycenterProblem) -> Result<(MultiPlan, MultiDual, Certificate)> {
    let (plan, d) = solve_mot_1d(&p.inputs, &p.weights)?;
    let ws: Vec<&[f64]> = p.inputs.iter().map(|m| m.weights()).collect();
    let primal = plan.cost(|idx| p.cost(idx));
    let dual = d.value(&ws);
    let viol = exhaustive_dual_violation(&d, |idx| p.cost(idx))
        .unwrap_or_else(|| support_slack(&plan, &d, |idx| p.cost(idx)));
    let tol = 1e-9 * (1.0 + libm::fabs(primal));
    Ok((plan, d, assemble_certificate(primal, dual, viol.max(0.0), tol)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarycenterReport {
    /// Last iterate translated by its optimal `λ`.
    pub duals: MultiDual,
    /// Dual value `H` at the last iterate.
    pub value: f64,
    /// Linear-oracle plan at the last iterate.
    pub plan: MultiPlan,
    pub certificate: Certificate,
    pub iterations: usize,
    pub trace: Vec<FwTraceRecord>,
    pub converged: bool,
}

struct MmLinearization {
    lam: Vec<f64>,
    grad: Vec<Vec<f64>>,
    vertex: MultiDual,
    plan: MultiPlan,
}

struct MmOracle<'a> {
    p: &'a BarycenterProblem,
    rho: f64,
    rk: Vec<f64>,
    logs: Vec<Vec<f64>>,
}

impl<'a> MmOracle<'a> {
    fn linearize(&self, d: &MultiDual) -> Result<MmLinearization> {
        let (lam, _) = mm_lambda(d, &self.logs, &self.p.weights, self.rho);
        let grad = translated_marginals(d, &self.p.inputs, &lam, &self.rk);
        let ws: Vec<&[f64]> = grad.iter().map(|g| g.as_slice()).collect();
        let (plan, vertex) = solve_mot_1d_with(&ws, |idx| self.p.cost(idx))?;
        Ok(MmLinearization {
            lam,
            grad,
            vertex,
            plan,
        })
    }

    fn h(&self, d: &MultiDual) -> f64 {
        mm_h(self.p, &self.logs, self.rho, d)
    }

    /// Derivative of `γ ↦ H(x + γ dir)`.
    fn slope(&self, x: &[f64], dir: &[f64], gamma: f64) -> f64 {
        let dims = dims_of(&self.p.inputs);
        let y: Vec<f64> = x.iter().zip(dir).map(|(a, b)| a + gamma * b).collect();
        let y = MultiDual::unflatten(&y, &dims);
        let (lam, _) = mm_lambda(&y, &self.logs, &self.p.weights, self.rho);
        let grad = translated_marginals(&y, &self.p.inputs, &lam, &self.rk);
        grad.iter().flatten().zip(dir).map(|(g, d)| g * d).sum()
    }

    /// Maximizer of `H` on `x + [0, 1]·dir`.
    fn line_search(&self, x: &[f64], dir: &[f64]) -> f64 {
        if self.slope(x, dir, 1.0) >= 0.0 {
            return 1.0;
        }
        if self.slope(x, dir, 0.0) <= 0.0 {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..LINE_SEARCH_ITERS {
            let mid = 0.5 * (lo + hi);
            if self.slope(x, dir, mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

fn flat_dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Frank-Wolfe on the KL multimarginal dual from a feasible `init`
/// (`Σ_k f_{k,i_k} ≤ Cc(i)`; zeros are feasible since `Cc ≥ 0`).
pub fn fw_barycenter<C: Clock>(
    p: &BarycenterProblem,
    config: &FwConfig,
    init: &MultiDual,
    clock: &mut C,
) -> Result<BarycenterReport> {
    config.validate()?;
    let rho = p.rho.ok_or(Error::Unsupported("balanced barycenters use solve_mot_1d"))?;
    let dims = dims_of(&p.inputs);
    init.check(&dims)?;
    if let Some(v) = exhaustive_dual_violation(init, |idx| p.cost(idx)) {
        if v > crate::duality::DUAL_FEASIBILITY_TOL {
            return Err(Error::InfeasibleDual { violation: v });
        }
    }
    let oracle = MmOracle {
        p,
        rho,
        rk: p.rhos().unwrap_or_default(),
        logs: p.inputs.iter().map(|m| log_weights(m.weights())).collect(),
    };
    let start = clock.now_ns();
    let mut x = init.flatten();
    let mut atoms: Vec<(Vec<f64>, f64)> = alloc::vec![(x.clone(), 1.0)];
    let mut trace = Vec::new();
    let mut converged = false;
    let mut last;

    let mut iter = 0;
    loop {
        let xd = MultiDual::unflatten(&x, &dims);
        let lin = oracle.linearize(&xd)?;
        let h = oracle.h(&xd);
        let g = lin.grad.concat();
        let v = lin.vertex.flatten();
        let fw_gap = flat_dot(&g, &v) - flat_dot(&g, &x);
        let primal = barycenter_primal(p, &lin.plan)?;
        let pd_gap = primal - h;
        trace.push(FwTraceRecord {
            iter,
            h0: h,
            fw_gap,
            pd_gap,
            err_f: None,
            wall_ns: clock.now_ns().saturating_sub(start),
        });
        last = (lin, h, primal, xd);
        if pd_gap < config.gap_tol {
            converged = true;
            break;
        }
        iter += 1;
        if iter >= config.max_iters {
            break;
        }
        match config.step {
            StepRule::Harmonic | StepRule::LineSearch => {
                let dir: Vec<f64> = v.iter().zip(&x).map(|(a, b)| a - b).collect();
                let gamma = if config.step == StepRule::Harmonic {
                    2.0 / (1.0 + iter as f64)
                } else {
                    oracle.line_search(&x, &dir)
                };
                x.iter_mut().zip(&dir).for_each(|(a, d)| *a += gamma.min(1.0) * d);
            }
            StepRule::Pairwise => {
                let away = atoms
                    .iter()
                    .enumerate()
                    .fold((0, f64::INFINITY), |best, (k, (a, _))| {
                        let s = flat_dot(&g, a);
                        if s < best.1 {
                            (k, s)
                        } else {
                            best
                        }
                    })
                    .0;
                let w = atoms[away].1;
                let dir: Vec<f64> = v.iter().zip(&atoms[away].0).map(|(a, b)| w * (a - b)).collect();
                let t = oracle.line_search(&x, &dir);
                x.iter_mut().zip(&dir).for_each(|(a, d)| *a += t * d);
                let target = atoms
                    .iter()
                    .position(|(a, _)| a.iter().zip(&v).all(|(p, q)| libm::fabs(p - q) < ATOM_MERGE_TOL));
                let target = target.unwrap_or_else(|| {
                    atoms.push((v.clone(), 0.0));
                    atoms.len() - 1
                });
                if target != away {
                    let moved = (t * w).min(atoms[away].1);
                    atoms[target].1 += moved;
                    atoms[away].1 -= moved;
                    if atoms[away].1 <= 0.0 {
                        atoms.swap_remove(away);
                    }
                }
            }
        }
    }

    let (lin, h, primal, xd) = last;
    let viol = exhaustive_dual_violation(&xd, |idx| p.cost(idx)).unwrap_or(0.0).max(0.0);
    let certificate = assemble_certificate(primal, h, viol, config.gap_tol);
    Ok(BarycenterReport {
        duals: xd.translated(&lin.lam),
        value: h,
        plan: lin.plan,
        certificate,
        iterations: trace.len(),
        trace,
        converged,
    })
}

/// One atom per plan entry at the barycentric point of its tuple, carrying
/// the entry's mass; atoms within `1e-12` of each other are merged.
pub fn extract_barycenter(plan: &MultiPlan, inputs: &[DiscreteMeasure], w: &[f64]) -> Result<DiscreteMeasure> {
    if plan.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    let mut atoms: Vec<(f64, f64)> = plan
        .entries()
        .iter()
        .map(|e| {
            let pts: Vec<f64> = e.idx.iter().enumerate().map(|(k, &i)| inputs[k].points()[i]).collect();
            (multimarginal_cost(&pts, w).1, e.mass)
        })
        .collect();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut pts: Vec<f64> = Vec::with_capacity(atoms.len());
    let mut ws: Vec<f64> = Vec::with_capacity(atoms.len());
    for (x, m) in atoms {
        match pts.last() {
            Some(&last) if x - last <= 1e-12 * (1.0 + libm::fabs(x)) => *ws.last_mut().unwrap() += m,
            _ => {
                pts.push(x);
                ws.push(m);
            }
        }
    }
    DiscreteMeasure::new(pts, ws)
}
