//! Sinkhorn iterations on the entropic UOT dual.
//!
//! Three variants share one driver:
//!
//! - **F**: alternate exact maximization of `F_ε` in `g` then `f`.
//! - **G**: the same on `G_ε(f̄, ḡ, λ)`, followed by an exact update of `λ`.
//! - **H**: alternate exact maximization of the translation-invariant `H_ε`
//!   (KL entropies only, where each half-step has a closed form).
//!
//! G and H iterates are reported after translation by `λ*`, which makes them
//! directly comparable with F iterates.

use alloc::vec::Vec;

use crate::duality::{lambda_star, lambda_star_from, log_mean_exp, DualPair, DensePlan, UotProblem};
use crate::entropies::{softmin_log, Entropy};
use crate::lse::log_weights;
use crate::measures::cost_quadruple_diameter;
use crate::{Clock, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    F,
    G,
    H,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AndersonConfig {
    /// Number of stored residuals `K`.
    pub depth: usize,
    /// Tikhonov regularization `r`, relative to the Gram matrix norm.
    pub reg: f64,
}

impl Default for AndersonConfig {
    fn default() -> Self {
        Self { depth: 4, reg: 1e-7 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornConfig {
    pub variant: Variant,
    pub max_iters: usize,
    /// Stop once `‖f_{t+1} - f_t‖_∞ < tol`.
    pub tol: f64,
    pub anderson: Option<AndersonConfig>,
}

impl Default for SinkhornConfig {
    fn default() -> Self {
        Self {
            variant: Variant::F,
            max_iters: 100_000,
            tol: 1e-9,
            anderson: None,
        }
    }
}

impl SinkhornConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("tol must be > 0"));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1"));
        }
        if let Some(a) = self.anderson {
            if a.depth == 0 {
                return Err(Error::InvalidParameter("anderson depth must be >= 1"));
            }
            if !(a.reg >= 0.0) {
                return Err(Error::InvalidParameter("anderson reg must be >= 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub delta_f: f64,
    pub err_f: Option<f64>,
    pub err_g: Option<f64>,
    pub wall_ns: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    /// Last iterate, translated by `λ*` for the G and H variants.
    pub final_pair: DualPair,
    pub iterations: usize,
    pub trace: Vec<TraceRecord>,
    pub converged: bool,
}

impl SolverReport {
    pub fn err_f(&self) -> Vec<f64> {
        self.trace.iter().filter_map(|r| r.err_f).collect()
    }
}

/// Log-weights and both layouts of the cost matrix.
struct Kernel {
    n: usize,
    m: usize,
    eps: f64,
    log_a: Vec<f64>,
    log_b: Vec<f64>,
    c: Vec<f64>,
    ct: Vec<f64>,
    scratch: Vec<f64>,
}

impl Kernel {
    fn new(prob: &UotProblem) -> Result<Self> {
        if !(prob.eps > 0.0) {
            return Err(Error::InvalidParameter("sinkhorn requires eps > 0"));
        }
        let c = prob.cost_matrix()?;
        Ok(Self {
            n: prob.n(),
            m: prob.m(),
            eps: prob.eps,
            log_a: log_weights(prob.alpha.weights()),
            log_b: log_weights(prob.beta.weights()),
            ct: c.transpose().as_slice().to_vec(),
            c: c.as_slice().to_vec(),
            scratch: Vec::new(),
        })
    }

    /// `Smin_α^ε(C(·, j) - f)` for every `j`.
    fn smin_alpha(&mut self, f: &[f64]) -> Vec<f64> {
        let Self {
            n, m, eps, log_a, ct, scratch, ..
        } = self;
        (0..*m)
            .map(|j| {
                let col = &ct[j * *n..(j + 1) * *n];
                softmin_log(log_a, *eps, |i| col[i] - f[i], scratch)
            })
            .collect()
    }

    /// `Smin_β^ε(C(i, ·) - g)` for every `i`.
    fn smin_beta(&mut self, g: &[f64]) -> Vec<f64> {
        let Self {
            n, m, eps, log_b, c, scratch, ..
        } = self;
        (0..*n)
            .map(|i| {
                let row = &c[i * *m..(i + 1) * *m];
                softmin_log(log_b, *eps, |j| row[j] - g[j], scratch)
            })
            .collect()
    }
}

fn neg_aprox(ent: &Entropy, eps: f64, s: Vec<f64>) -> Result<Vec<f64>> {
    s.into_iter().map(|x| ent.aprox(eps, -x).map(|y| -y)).collect()
}

fn update_g(prob: &UotProblem, k: &mut Kernel, f: &[f64]) -> Result<Vec<f64>> {
    let s = k.smin_alpha(f);
    neg_aprox(&prob.ent2, k.eps, s)
}

fn update_f(prob: &UotProblem, k: &mut Kernel, g: &[f64]) -> Result<Vec<f64>> {
    let s = k.smin_beta(g);
    neg_aprox(&prob.ent1, k.eps, s)
}

fn f_step(prob: &UotProblem, k: &mut Kernel, d: &DualPair) -> Result<DualPair> {
    let g = update_g(prob, k, &d.f)?;
    let f = update_f(prob, k, &g)?;
    Ok(DualPair::new(f, g))
}

fn g_step(prob: &UotProblem, k: &mut Kernel, d: &DualPair, lam: f64) -> Result<(DualPair, f64)> {
    let shifted: Vec<f64> = d.f.iter().map(|x| x + lam).collect();
    let g = update_g(prob, k, &shifted)?;
    let f = update_f(prob, k, &g)?;
    let next = DualPair::new(
        f.iter().map(|x| x - lam).collect(),
        g.iter().map(|x| x + lam).collect(),
    );
    let lam = lambda_star_from(prob, &next, lam)?;
    Ok((next, lam))
}

fn kl_rhos(prob: &UotProblem) -> Result<(f64, f64)> {
    match (prob.ent1, prob.ent2) {
        (Entropy::Kl { rho: r1 }, Entropy::Kl { rho: r2 }) => Ok((r1, r2)),
        _ => Err(Error::Unsupported("h-sinkhorn requires kl")),
    }
}

/// `Smin^ρ` of a potential against its own measure.
fn self_smin(log_w: &[f64], h: &[f64], rho: f64) -> f64 {
    -rho * log_mean_exp(log_w, h, rho)
}

fn h_step(prob: &UotProblem, k: &mut Kernel, d: &DualPair) -> Result<DualPair> {
    let (r1, r2) = kl_rhos(prob)?;
    let eps = k.eps;

    let sa = self_smin(&k.log_a, &d.f, r1);
    let shift = eps / (eps + r2) * (r2 / (r1 + r2)) * sa;
    let mut g: Vec<f64> = k
        .smin_alpha(&d.f)
        .into_iter()
        .map(|s| r2 / (r2 + eps) * s - shift)
        .collect();
    let k2 = eps / (eps + r2) * (r1 / (r1 + r2));
    let corr = k2 / (1.0 - k2) * self_smin(&k.log_b, &g, r2);
    g.iter_mut().for_each(|x| *x += corr);

    let sb = self_smin(&k.log_b, &g, r2);
    let shift = eps / (eps + r1) * (r1 / (r1 + r2)) * sb;
    let mut f: Vec<f64> = k
        .smin_beta(&g)
        .into_iter()
        .map(|s| r1 / (r1 + eps) * s - shift)
        .collect();
    let k1 = eps / (eps + r1) * (r2 / (r1 + r2));
    let corr = k1 / (1.0 - k1) * self_smin(&k.log_a, &f, r1);
    f.iter_mut().for_each(|x| *x += corr);

    Ok(DualPair::new(f, g))
}

/// One F-Sinkhorn step: `g ← -aprox_{φ₂*}(-Smin_α^ε(C - f))`, then
/// `f ← -aprox_{φ₁*}(-Smin_β^ε(C - g))`.
pub fn f_sinkhorn_step(prob: &UotProblem, d: &DualPair) -> Result<DualPair> {
    d.check(prob.n(), prob.m())?;
    let mut k = Kernel::new(prob)?;
    f_step(prob, &mut k, d)
}

/// One G-Sinkhorn step on `(f̄, ḡ, λ)`.
///
/// Both half-updates maximize `G_ε` with `λ` frozen; `λ` is then replaced by
/// `λ*(f̄', ḡ')`. The dual pair in use is `(f̄ + λ, ḡ - λ)`.
pub fn g_sinkhorn_step(prob: &UotProblem, d: &DualPair, lam: f64) -> Result<(DualPair, f64)> {
    d.check(prob.n(), prob.m())?;
    if !lam.is_finite() {
        return Err(Error::NonFinite("translation"));
    }
    let mut k = Kernel::new(prob)?;
    g_step(prob, &mut k, d, lam)
}

/// One H-Sinkhorn step: exact maximization of `H_ε` in `ḡ`, then in `f̄`.
///
/// Only KL entropies are supported.
pub fn h_sinkhorn_step(prob: &UotProblem, d: &DualPair) -> Result<DualPair> {
    kl_rhos(prob)?;
    d.check(prob.n(), prob.m())?;
    let mut k = Kernel::new(prob)?;
    h_step(prob, &mut k, d)
}

/// `max_i |f̄_i/ε - Smin_β^ε(C(i,·) - ḡ)/ε + (f̄_i + λ*(f̄, ḡ))/ρ₁|`, which
/// vanishes when `f̄` maximizes `H_ε(·, ḡ)` (KL only).
pub fn h_optimality_residual(prob: &UotProblem, d: &DualPair) -> Result<f64> {
    let (r1, _) = kl_rhos(prob)?;
    d.check(prob.n(), prob.m())?;
    let mut k = Kernel::new(prob)?;
    let lam = lambda_star(prob, d)?;
    let s = k.smin_beta(&d.g);
    let eps = k.eps;
    Ok(d
        .f
        .iter()
        .zip(&s)
        .map(|(&f, &s)| libm::fabs(f / eps - s / eps + (f + lam) / r1))
        .fold(0.0, f64::max))
}

/// Weights `c = (UᵀU + rI)⁻¹1 / 1ᵀ(UᵀU + rI)⁻¹1` for residual columns `U`.
pub fn anderson_weights(u: &[Vec<f64>], r: f64) -> Result<Vec<f64>> {
    let k = u.len();
    if k == 0 {
        return Err(Error::InvalidParameter("no residuals"));
    }
    if !(r >= 0.0) {
        return Err(Error::InvalidParameter("reg must be >= 0"));
    }
    let len = u[0].len();
    if let Some(bad) = u.iter().find(|c| c.len() != len) {
        return Err(Error::LengthMismatch {
            expected: len,
            found: bad.len(),
        });
    }
    let mut gram = alloc::vec![0.0; k * k];
    for a in 0..k {
        for b in a..k {
            let v: f64 = u[a].iter().zip(&u[b]).map(|(x, y)| x * y).sum();
            gram[a * k + b] = v;
            gram[b * k + a] = v;
        }
        gram[a * k + a] += r;
    }
    let z = solve_dense(gram, alloc::vec![1.0; k])?;
    let s: f64 = z.iter().sum();
    if s == 0.0 || !s.is_finite() {
        return Err(Error::Singular);
    }
    Ok(z.into_iter().map(|x| x / s).collect())
}

/// Gaussian elimination with partial pivoting on a row-major square system.
fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let k = b.len();
    let scale = a.iter().fold(0.0f64, |m, x| m.max(libm::fabs(*x)));
    if scale == 0.0 {
        return Err(Error::Singular);
    }
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&x, &y| libm::fabs(a[x * k + col]).total_cmp(&libm::fabs(a[y * k + col])))
            .unwrap();
        if libm::fabs(a[piv * k + col]) <= 1e-14 * scale {
            return Err(Error::Singular);
        }
        if piv != col {
            for j in 0..k {
                a.swap(piv * k + j, col * k + j);
            }
            b.swap(piv, col);
        }
        for row in col + 1..k {
            let factor = a[row * k + col] / a[col * k + col];
            for j in col..k {
                a[row * k + j] -= factor * a[col * k + j];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = alloc::vec![0.0; k];
    for row in (0..k).rev() {
        let s: f64 = (row + 1..k).map(|j| a[row * k + j] * x[j]).sum();
        x[row] = (b[row] - s) / a[row * k + row];
    }
    Ok(x)
}

/// Extrapolation over the stored `(x, T(x))` pairs.
#[derive(Debug)]
struct Anderson {
    cfg: AndersonConfig,
    xs: Vec<Vec<f64>>,
    txs: Vec<Vec<f64>>,
}

impl Anderson {
    fn new(cfg: AndersonConfig) -> Self {
        Self {
            cfg,
            xs: Vec::new(),
            txs: Vec::new(),
        }
    }

    /// Records `(x, T(x))` and returns the extrapolated point, if any.
    fn push(&mut self, x: Vec<f64>, tx: Vec<f64>) -> Option<Vec<f64>> {
        if self.xs.len() == self.cfg.depth {
            self.xs.remove(0);
            self.txs.remove(0);
        }
        self.xs.push(x);
        self.txs.push(tx);
        if self.xs.len() < 2 {
            return None;
        }
        let u: Vec<Vec<f64>> = self
            .xs
            .iter()
            .zip(&self.txs)
            .map(|(x, tx)| tx.iter().zip(x).map(|(a, b)| a - b).collect())
            .collect();
        let norm = libm::sqrt(
            u.iter()
                .flat_map(|a| u.iter().map(move |b| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()))
                .map(|v| v * v)
                .sum::<f64>(),
        );
        if norm == 0.0 || !norm.is_finite() {
            return None;
        }
        let c = anderson_weights(&u, self.cfg.reg * norm).ok()?;
        let mut out = alloc::vec![0.0; self.txs[0].len()];
        for (ck, tx) in c.iter().zip(&self.txs) {
            for (o, v) in out.iter_mut().zip(tx) {
                *o += ck * v;
            }
        }
        out.iter().all(|v| v.is_finite()).then_some(out)
    }
}

fn concat(d: &DualPair) -> Vec<f64> {
    let mut v = d.f.clone();
    v.extend_from_slice(&d.g);
    v
}

fn split(v: Vec<f64>, n: usize) -> DualPair {
    let mut f = v;
    let g = f.split_off(n);
    DualPair::new(f, g)
}

/// Iterates the configured variant from `init` (read as `(f̄, ḡ)` for G and H).
///
/// Each step records `‖f_{t+1} - f_t‖_∞` on the translated iterates and, with a
/// reference pair, the sup-distances of `f_t` and `g_t` to it. Stops when the
/// change drops below `tol` or after `max_iters` steps.
pub fn run<C: Clock>(
    prob: &UotProblem,
    config: &SinkhornConfig,
    init: &DualPair,
    reference: Option<&DualPair>,
    clock: &mut C,
) -> Result<SolverReport> {
    config.validate()?;
    init.check(prob.n(), prob.m())?;
    if let Some(r) = reference {
        r.check(prob.n(), prob.m())?;
    }
    if config.variant == Variant::H {
        kl_rhos(prob)?;
    }
    let mut k = Kernel::new(prob)?;
    let n = prob.n();
    let start = clock.now_ns();

    let mut state = init.clone();
    let mut lam = match config.variant {
        Variant::G => lambda_star(prob, &state)?,
        _ => 0.0,
    };
    let translate = |s: &DualPair, lam: f64| -> Result<DualPair> {
        match config.variant {
            Variant::F => Ok(s.clone()),
            Variant::G => Ok(s.translated(lam)),
            Variant::H => Ok(s.translated(lambda_star(prob, s)?)),
        }
    };
    let mut current = translate(&state, lam)?;
    let mut acc = config.anderson.map(Anderson::new);
    let mut trace = Vec::new();
    let mut converged = false;

    for iter in 1..=config.max_iters {
        let (mut next, mut next_lam) = match config.variant {
            Variant::F => (f_step(prob, &mut k, &state)?, 0.0),
            Variant::G => g_step(prob, &mut k, &state, lam)?,
            Variant::H => (h_step(prob, &mut k, &state)?, 0.0),
        };
        if let Some(acc) = acc.as_mut() {
            if let Some(x) = acc.push(concat(&state), concat(&next)) {
                let cand = split(x, n);
                let accepted = match config.variant {
                    Variant::G => lambda_star_from(prob, &cand, next_lam).ok().map(|l| (cand, l)),
                    _ => Some((cand, 0.0)),
                };
                if let Some((c, l)) = accepted {
                    next = c;
                    next_lam = l;
                }
            }
        }
        if next.f.iter().chain(&next.g).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("sinkhorn iterate"));
        }
        let translated = translate(&next, next_lam)?;
        let delta_f = crate::sup_dist(&translated.f, &current.f);
        let (err_f, err_g) = match reference {
            Some(r) => (
                Some(crate::sup_dist(&translated.f, &r.f)),
                Some(crate::sup_dist(&translated.g, &r.g)),
            ),
            None => (None, None),
        };
        trace.push(TraceRecord {
            iter,
            delta_f,
            err_f,
            err_g,
            wall_ns: clock.now_ns().saturating_sub(start),
        });
        state = next;
        lam = next_lam;
        current = translated;
        if delta_f < config.tol {
            converged = true;
            break;
        }
    }
    Ok(SolverReport {
        final_pair: current,
        iterations: trace.len(),
        trace,
        converged,
    })
}

/// `exp(median_t log(e_{t+1}/e_t))`, computed on the prefix of `errors`
/// that stays at or above `1e-13`.
pub fn estimate_rate(errors: &[f64]) -> Result<f64> {
    if errors.iter().any(|e| !(e.is_finite())) {
        return Err(Error::NonFinite("error sequence"));
    }
    let usable = errors.iter().position(|&e| e < 1e-13).unwrap_or(errors.len());
    let e = &errors[..usable];
    if e.len() < 3 {
        return Err(Error::NotEnoughData);
    }
    let mut logs: Vec<f64> = e.windows(2).map(|w| libm::log(w[1] / w[0])).collect();
    logs.sort_by(f64::total_cmp);
    let h = logs.len() / 2;
    let med = if logs.len() % 2 == 1 {
        logs[h]
    } else {
        0.5 * (logs[h - 1] + logs[h])
    };
    Ok(libm::exp(med))
}

/// Birkhoff-Hopf contraction factor `tanh(Δ / 4ε)` of the softmin in the
/// Hilbert metric, with `Δ` the quadruple-difference diameter of the cost.
pub fn birkhoff_rate_bound(prob: &UotProblem) -> Result<f64> {
    if !(prob.eps > 0.0) {
        return Err(Error::InvalidParameter("eps must be > 0"));
    }
    let delta = cost_quadruple_diameter(&prob.cost_matrix()?);
    Ok(libm::tanh(delta / (4.0 * prob.eps)))
}

/// Entropic plan `π_ij = α_i β_j e^{(f_i + g_j - C_ij)/ε}`.
pub fn primal_plan(prob: &UotProblem, d: &DualPair) -> Result<DensePlan> {
    d.check(prob.n(), prob.m())?;
    if !(prob.eps > 0.0) {
        return Err(Error::InvalidParameter("eps must be > 0"));
    }
    let (n, m) = (prob.n(), prob.m());
    let aw = prob.alpha.weights();
    let bw = prob.beta.weights();
    let mut data = Vec::with_capacity(n * m);
    for i in 0..n {
        for j in 0..m {
            let w = aw[i] * bw[j];
            data.push(if w > 0.0 {
                w * libm::exp((d.f[i] + d.g[j] - prob.cost_at(i, j)) / prob.eps)
            } else {
                0.0
            });
        }
    }
    DensePlan::new(n, m, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::hilbert_norm;
    use crate::duality::{eval_f, eval_g, eval_h, eval_primal};
    use crate::measures::{CostMatrix, CostSpec, DiscreteMeasure};
    use crate::NoClock;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn measure(rng: &mut ChaCha8Rng, n: usize, mass: f64) -> DiscreteMeasure {
        let pts: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
        let s: f64 = w.iter().sum();
        DiscreteMeasure::new(pts, w.iter().map(|x| x * mass / s).collect()).unwrap()
    }

    fn kl_problem(seed: u64, n: usize, m: usize, rho1: f64, rho2: f64, eps: f64) -> UotProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = measure(&mut rng, n, 1.0);
        let b = measure(&mut rng, m, 1.4);
        UotProblem::new(
            a,
            b,
            CostSpec::Power(2.0),
            Entropy::kl(rho1).unwrap(),
            Entropy::kl(rho2).unwrap(),
            eps,
        )
        .unwrap()
    }

    fn solve(prob: &UotProblem, variant: Variant, tol: f64) -> SolverReport {
        let cfg = SinkhornConfig {
            variant,
            tol,
            max_iters: 200_000,
            anderson: None,
        };
        let r = run(prob, &cfg, &DualPair::zeros(prob.n(), prob.m()), None, &mut NoClock).unwrap();
        assert!(r.converged);
        r
    }

    #[test]
    fn anderson_examples() {
        assert_eq!(anderson_weights(&[vec![0.3, -1.0]], 1e-7).unwrap(), vec![1.0]);
        let col = vec![0.5, 1.0, -2.0];
        let cols = [col.clone(), col.clone(), col];
        for (r, tol) in [(1.0, 1e-15), (1e-7, 1e-6)] {
            for x in anderson_weights(&cols, r).unwrap() {
                assert!((x - 1.0 / 3.0).abs() < tol);
            }
        }
        let u = [vec![libm::sqrt(2.0), 0.0], vec![0.0, 1.0]];
        let c = anderson_weights(&u, 0.0).unwrap();
        assert!((c[0] - 1.0 / 3.0).abs() < 1e-15 && (c[1] - 2.0 / 3.0).abs() < 1e-15);
        let col = vec![1.0, 1.0];
        assert_eq!(anderson_weights(&[col.clone(), col], 0.0), Err(Error::Singular));
    }

    #[test]
    fn rate_examples() {
        let geo: Vec<f64> = (0..20).map(|t| libm::pow(0.5, t as f64)).collect();
        assert!((estimate_rate(&geo).unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(estimate_rate(&[0.3; 6]).unwrap(), 1.0);
        let mut e = vec![1.0];
        for t in 0..10 {
            let r = if t == 4 { 3.0 } else { 0.7 };
            e.push(e.last().unwrap() * r);
        }
        assert!((estimate_rate(&e).unwrap() - 0.7).abs() < 1e-14);
        assert_eq!(estimate_rate(&[1.0, 0.5]), Err(Error::NotEnoughData));
        assert_eq!(estimate_rate(&[1.0, 0.5, 1e-14, 1e-15]), Err(Error::NotEnoughData));
    }

    #[test]
    fn birkhoff_examples() {
        let a = DiscreteMeasure::uniform(vec![0.0, 1.0, 2.0]).unwrap();
        let flat = CostSpec::Explicit(CostMatrix::from_fn(3, 3, |_, _| 1.5).unwrap());
        let kl = Entropy::kl(1.0).unwrap();
        let p = UotProblem::new(a.clone(), a.clone(), flat, kl, kl, 0.1).unwrap();
        assert_eq!(birkhoff_rate_bound(&p).unwrap(), 0.0);
        let p = UotProblem::new(a.clone(), a, CostSpec::Power(2.0), kl, kl, 1e-3).unwrap();
        assert!(birkhoff_rate_bound(&p).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn birkhoff_bound_dominates_balanced_rate() {
        let pts: Vec<f64> = (0..12).map(|i| i as f64 / 11.0).collect();
        let a = DiscreteMeasure::uniform(pts.clone()).unwrap();
        let b = DiscreteMeasure::new(pts, (1..=12).map(|i| i as f64 / 78.0).collect()).unwrap();
        let p = UotProblem::new(a, b, CostSpec::Power(2.0), Entropy::Balanced, Entropy::Balanced, 1.0).unwrap();
        let star = solve(&p, Variant::F, 1e-14).final_pair;
        let mut d = DualPair::zeros(12, 12);
        let mut errs = vec![];
        for _ in 0..40 {
            d = f_sinkhorn_step(&p, &d).unwrap();
            let diff: Vec<f64> = d.f.iter().zip(&star.f).map(|(x, y)| x - y).collect();
            errs.push(hilbert_norm(&diff));
        }
        let kappa = estimate_rate(&errs).unwrap();
        assert!(kappa <= birkhoff_rate_bound(&p).unwrap());
    }

    #[test]
    fn balanced_step_is_log_domain_sinkhorn() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = measure(&mut rng, 4, 1.0);
        let b = measure(&mut rng, 3, 1.0);
        let p = UotProblem::new(a.clone(), b.clone(), CostSpec::Power(2.0), Entropy::Balanced, Entropy::Balanced, 0.3)
            .unwrap();
        let d = f_sinkhorn_step(&p, &DualPair::zeros(4, 3)).unwrap();
        let c = p.cost_matrix().unwrap();
        for j in 0..3 {
            let s: f64 = (0..4).map(|i| a.weights()[i] * libm::exp(-c.get(i, j) / 0.3)).sum();
            assert!((d.g[j] + 0.3 * libm::log(s)).abs() < 1e-13);
        }
        for i in 0..4 {
            let s: f64 = (0..3)
                .map(|j| b.weights()[j] * libm::exp((d.g[j] - c.get(i, j)) / 0.3))
                .sum();
            assert!((d.f[i] + 0.3 * libm::log(s)).abs() < 1e-13);
        }
    }

    #[test]
    fn single_atom_fixed_point() {
        let a = DiscreteMeasure::uniform(vec![0.0]).unwrap();
        let kl = Entropy::kl(0.7).unwrap();
        let p = UotProblem::new(a.clone(), a, CostSpec::Power(2.0), kl, kl, 1.0).unwrap();
        let d = f_sinkhorn_step(&p, &DualPair::zeros(1, 1)).unwrap();
        assert_eq!(d, DualPair::zeros(1, 1));
    }

    #[test]
    fn fixed_point_matches_gradient_ascent() {
        let p = kl_problem(5, 2, 2, 1.0, 1.0, 1.0);
        let star = solve(&p, Variant::F, 1e-14).final_pair;
        // plain gradient ascent on the smooth concave F
        let c = p.cost_matrix().unwrap();
        let (aw, bw) = (p.alpha.weights().to_vec(), p.beta.weights().to_vec());
        let mut d = DualPair::zeros(2, 2);
        for _ in 0..200_000 {
            let mut gf = [0.0; 2];
            let mut gg = [0.0; 2];
            for i in 0..2 {
                gf[i] += aw[i] * libm::exp(-d.f[i]);
                gg[i] += bw[i] * libm::exp(-d.g[i]);
                for j in 0..2 {
                    let k = aw[i] * bw[j] * libm::exp(d.f[i] + d.g[j] - c.get(i, j));
                    gf[i] -= k;
                    gg[j] -= k;
                }
            }
            for i in 0..2 {
                d.f[i] += 0.5 * gf[i];
                d.g[i] += 0.5 * gg[i];
            }
            if gf.iter().chain(&gg).all(|x| x.abs() < 1e-13) {
                break;
            }
        }
        assert!(d.sup_dist(&star) < 1e-10, "{:?} vs {:?}", d, star);
    }

    #[test]
    fn g_step_with_zero_translation_on_symmetric_instance() {
        let a = DiscreteMeasure::uniform(vec![0.0, 0.4, 1.0]).unwrap();
        let kl = Entropy::kl(1.0).unwrap();
        let p = UotProblem::new(a.clone(), a, CostSpec::Power(2.0), kl, kl, 0.5).unwrap();
        let d = DualPair::zeros(3, 3);
        let (g, lam) = g_sinkhorn_step(&p, &d, 0.0).unwrap();
        let f = f_sinkhorn_step(&p, &d).unwrap();
        assert!(g.sup_dist(&f) < 1e-15);
        assert_eq!(lam, lambda_star(&p, &f).unwrap());
        let one = DiscreteMeasure::uniform(vec![0.3]).unwrap();
        let p = UotProblem::new(one.clone(), one, CostSpec::Power(2.0), kl, kl, 0.5).unwrap();
        let (_, lam) = g_sinkhorn_step(&p, &DualPair::zeros(1, 1), 0.0).unwrap();
        assert_eq!(lam, 0.0);
    }

    #[test]
    fn g_iterates_increase_the_objective() {
        let p = kl_problem(8, 6, 5, 0.5, 2.0, 0.2);
        let mut d = DualPair::zeros(6, 5);
        let mut lam = lambda_star(&p, &d).unwrap();
        let mut prev = eval_g(&p, &d, lam).unwrap();
        for _ in 0..50 {
            let (nd, nl) = g_sinkhorn_step(&p, &d, lam).unwrap();
            let v = eval_g(&p, &nd, nl).unwrap();
            assert!(v >= prev - 1e-12 * (1.0 + prev.abs()));
            prev = v;
            d = nd;
            lam = nl;
        }
    }

    #[test]
    fn berg_g_and_f_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = measure(&mut rng, 3, 1.0);
        let b = measure(&mut rng, 3, 1.5);
        let berg = Entropy::berg(1.0).unwrap();
        let p = UotProblem::new(a, b, CostSpec::Power(2.0), berg, berg, 0.5).unwrap();
        let f = solve(&p, Variant::F, 1e-12).final_pair;
        let g = solve(&p, Variant::G, 1e-12).final_pair;
        assert!(f.sup_dist(&g) < 1e-6);
        assert!(h_sinkhorn_step(&p, &f).is_err());
        let cfg = SinkhornConfig::new(Variant::H);
        assert_eq!(
            run(&p, &cfg, &DualPair::zeros(3, 3), None, &mut NoClock),
            Err(Error::Unsupported("h-sinkhorn requires kl"))
        );
    }

    #[test]
    fn xi_identity() {
        for rho in [0.5, 1.0, 2.0] {
            for eps in [0.01, 0.3, 1.0] {
                let k: f64 = eps / (eps + rho) * (rho / (2.0 * rho));
                let xi = eps / (eps + 2.0 * rho);
                assert!((k / (1.0 - k) - xi).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn h_iterates_are_optimal_in_f() {
        let p = kl_problem(9, 7, 6, 0.4, 1.5, 0.1);
        let mut d = DualPair::zeros(7, 6);
        for _ in 0..30 {
            d = h_sinkhorn_step(&p, &d).unwrap();
            assert!(h_optimality_residual(&p, &d).unwrap() < 1e-9);
        }
    }

    #[test]
    fn variants_share_the_fixed_point() {
        for (r1, r2, eps) in [(1.0, 1.0, 0.1), (0.3, 2.0, 0.5), (10.0, 10.0, 1.0)] {
            let p = kl_problem(11, 8, 9, r1, r2, eps);
            let f = solve(&p, Variant::F, 1e-11).final_pair;
            let g = solve(&p, Variant::G, 1e-11).final_pair;
            let h = solve(&p, Variant::H, 1e-11).final_pair;
            assert!(f.sup_dist(&g) < 1e-6, "G {}", f.sup_dist(&g));
            assert!(f.sup_dist(&h) < 1e-6, "H {}", f.sup_dist(&h));
            // weak duality closes at the fixed point
            let primal = eval_primal(&p, &primal_plan(&p, &f).unwrap()).unwrap();
            let dual = eval_f(&p, &f).unwrap();
            assert!((primal - dual).abs() < 1e-7 * (1.0 + dual.abs()));
            assert!((eval_h(&p, &h).unwrap() - dual).abs() < 1e-9 * (1.0 + dual.abs()));
        }
    }

    #[test]
    fn huge_tolerance_stops_after_one_step() {
        let p = kl_problem(2, 3, 3, 1.0, 1.0, 0.5);
        let cfg = SinkhornConfig {
            tol: 1e6,
            ..SinkhornConfig::default()
        };
        let r = run(&p, &cfg, &DualPair::zeros(3, 3), None, &mut NoClock).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(r.converged);
        assert_eq!(r.trace.len(), 1);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let p = kl_problem(2, 5, 5, 10.0, 10.0, 0.01);
        let cfg = SinkhornConfig {
            max_iters: 3,
            ..SinkhornConfig::default()
        };
        let r = run(&p, &cfg, &DualPair::zeros(5, 5), None, &mut NoClock).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
    }

    #[test]
    fn relaxed_contraction_bound_and_f_rate() {
        let (eps, rho) = (0.1, 1.0);
        let p = kl_problem(21, 20, 20, rho, rho, eps);
        let star = solve(&p, Variant::F, 1e-14).final_pair;
        let kbar = libm::pow(1.0 + eps / rho, -2.0);

        let init = DualPair::zeros(20, 20);
        let cfg = SinkhornConfig {
            variant: Variant::H,
            tol: 1e-13,
            ..SinkhornConfig::default()
        };
        let h = run(&p, &cfg, &init, Some(&star), &mut NoClock).unwrap();
        let diff: Vec<f64> = init.f.iter().zip(&star.f).map(|(x, y)| x - y).collect();
        let e0 = hilbert_norm(&diff);
        for r in &h.trace {
            let lhs = r.err_f.unwrap() + r.err_g.unwrap();
            let rhs = 2.0 * libm::pow(kbar, r.iter as f64) * e0;
            assert!(lhs <= rhs + 1e-12, "t={} {lhs} > {rhs}", r.iter);
        }

        let cfg = SinkhornConfig {
            tol: 1e-13,
            ..SinkhornConfig::default()
        };
        let f = run(&p, &cfg, &init, Some(&star), &mut NoClock).unwrap();
        let kappa = estimate_rate(&f.err_f()).unwrap();
        assert!(kappa <= kbar + 0.02, "{kappa} vs {kbar}");
    }

    #[test]
    fn anderson_does_not_slow_down_f() {
        let p = kl_problem(31, 20, 20, 1.0, 1.0, 0.05);
        let star = solve(&p, Variant::F, 1e-14).final_pair;
        let init = DualPair::zeros(20, 20);
        let mk = |anderson| SinkhornConfig {
            max_iters: 200,
            tol: 1e-300,
            anderson,
            ..SinkhornConfig::default()
        };
        let plain = run(&p, &mk(None), &init, Some(&star), &mut NoClock).unwrap();
        let acc = run(&p, &mk(Some(AndersonConfig::default())), &init, Some(&star), &mut NoClock).unwrap();
        let last = |r: &SolverReport| r.trace.last().unwrap().err_f.unwrap();
        assert!(last(&acc) <= last(&plain), "{} vs {}", last(&acc), last(&plain));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn f_steps_never_decrease_f(seed in 0u64..1000, rho in 0.1f64..5.0, eps in 0.05f64..1.0) {
            let p = kl_problem(seed, 5, 6, rho, 1.3 * rho, eps);
            let mut d = DualPair::zeros(5, 6);
            let mut prev = eval_f(&p, &d).unwrap();
            for _ in 0..200 {
                d = f_sinkhorn_step(&p, &d).unwrap();
                let v = eval_f(&p, &d).unwrap();
                prop_assert!(v >= prev - 1e-12 * (1.0 + prev.abs()));
                prev = v;
            }
        }

        #[test]
        fn h_step_is_translation_equivariant(seed in 0u64..1000, mu in -5.0f64..5.0) {
            let p = kl_problem(seed, 5, 4, 0.7, 1.9, 0.3);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = DualPair::new(
                (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            );
            let base = h_sinkhorn_step(&p, &d).unwrap();
            let moved = h_sinkhorn_step(&p, &d.translated(mu)).unwrap();
            prop_assert!(moved.sup_dist(&base.translated(mu)) < 1e-10);
        }
    }
}
