//! Command definitions and their implementations.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use uot_core::barycenter::{self, BarycenterProblem, MultiDual};
use uot_core::certify::{self, assemble_certificate, Certificate};
use uot_core::duality::{self, eval_g, eval_h, eval_primal, lambda_star, updated_marginals};
use uot_core::fw::{default_init, fw_solve, FwConfig, StepRule};
use uot_core::ot1d::solve_ot_1d;
use uot_core::sinkhorn::{self, estimate_rate, AndersonConfig, SinkhornConfig, Variant};
use uot_core::{CostSpec, DiscreteMeasure, DualPair, Entropy, Error as CoreError, UotProblem};

use crate::gen::{self, MixtureParams};
use crate::io;
use crate::StdClock;

#[derive(Debug, Parser)]
#[command(name = "uotkit", version, about = "Translation-invariant unbalanced optimal transport in 1-D")]
pub struct Cli {
    /// Write 0 in every wall_ns column so data files are reproducible byte for byte.
    #[arg(long, global = true)]
    pub no_timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic measure.
    Gen(GenArgs),
    /// Run F-, G- or H-Sinkhorn and write the convergence trace.
    Sinkhorn(SinkhornArgs),
    /// Estimate contraction rates of the Sinkhorn variants over a grid of rho.
    Rates(RatesArgs),
    /// Solve unregularized 1-D UOT with Frank-Wolfe.
    Uot1d(Uot1dArgs),
    /// Compute an unbalanced (or balanced) barycenter.
    Barycenter(BarycenterArgs),
    /// Check a dual pair: duality gap, optimal translation and norms against oracles.
    Certify(CertifyArgs),
}

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    /// Iteration budget exhausted or certificate not met.
    Exhausted,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Converged => 0,
            Status::Exhausted => 2,
        }
    }

    fn from_flag(ok: bool) -> Self {
        if ok {
            Status::Converged
        } else {
            Status::Exhausted
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Mixture,
    Uniform,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value = "mixture")]
    pub kind: GenKind,
    /// Number of atoms.
    #[arg(short, long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.03)]
    pub sigma: f64,
    #[arg(long)]
    pub mu1: Option<f64>,
    #[arg(long)]
    pub mu2: Option<f64>,
    /// Mass of the first mixture component.
    #[arg(long)]
    pub a: Option<f64>,
    /// Mass of the second mixture component.
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub lo: f64,
    #[arg(long, default_value_t = 1.0)]
    pub hi: f64,
    /// Total mass of a uniform measure.
    #[arg(long, default_value_t = 1.0)]
    pub mass: f64,
    /// Output file (`.json` for JSON); stdout otherwise. A `.meta.json` sidecar is written next to it.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EntropyKind {
    Kl,
    Berg,
    Balanced,
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    pub alpha: PathBuf,
    pub beta: PathBuf,
    #[arg(long, value_enum, default_value = "kl")]
    pub entropy: EntropyKind,
    #[arg(long, default_value_t = 1.0)]
    pub rho1: f64,
    /// Defaults to --rho1.
    #[arg(long)]
    pub rho2: Option<f64>,
    /// Ground cost |x - y|^p.
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
}

impl ProblemArgs {
    fn entropies(&self) -> Result<(Entropy, Entropy)> {
        let r2 = self.rho2.unwrap_or(self.rho1);
        Ok(match self.entropy {
            EntropyKind::Kl => (Entropy::kl(self.rho1)?, Entropy::kl(r2)?),
            EntropyKind::Berg => (Entropy::berg(self.rho1)?, Entropy::berg(r2)?),
            EntropyKind::Balanced => (Entropy::Balanced, Entropy::Balanced),
        })
    }

    fn problem(&self, eps: f64) -> Result<UotProblem> {
        let a = io::read_measure(&self.alpha)?;
        let b = io::read_measure(&self.beta)?;
        let (e1, e2) = self.entropies()?;
        Ok(UotProblem::new(a, b, CostSpec::power(self.p)?, e1, e2, eps)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    F,
    G,
    H,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::F => Variant::F,
            VariantArg::G => Variant::G,
            VariantArg::H => Variant::H,
        }
    }
}

#[derive(Debug, Args)]
pub struct SinkhornArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, value_enum, default_value = "f")]
    pub variant: VariantArg,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    /// Enable Anderson extrapolation.
    #[arg(long)]
    pub anderson: bool,
    #[arg(long, default_value_t = 4)]
    pub anderson_depth: usize,
    #[arg(long, default_value_t = 1e-7)]
    pub anderson_reg: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Reference duals (`{"f":[...],"g":[...]}`) for the err_f/err_g columns.
    #[arg(long = "ref")]
    pub reference: Option<PathBuf>,
    /// Trace CSV; stdout otherwise.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Final duals as JSON.
    #[arg(long)]
    pub duals_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RatesArgs {
    pub alpha: PathBuf,
    pub beta: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.5,1,5")]
    pub rho_grid: Vec<f64>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "f,g,h")]
    pub variants: Vec<VariantArg>,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Rows solved concurrently; output order does not depend on it.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, default_value_t = 100_000)]
    pub max_iters: usize,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Harmonic step 2/(t+2).
    Fw,
    /// Exact line search.
    FwLs,
    /// Pairwise Frank-Wolfe.
    Pfw,
}

impl From<Method> for StepRule {
    fn from(m: Method) -> Self {
        match m {
            Method::Fw => StepRule::Harmonic,
            Method::FwLs => StepRule::LineSearch,
            Method::Pfw => StepRule::Pairwise,
        }
    }
}

#[derive(Debug, Args)]
pub struct Uot1dArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, value_enum, default_value = "fw-ls")]
    pub method: Method,
    #[arg(long, default_value_t = 1e-6)]
    pub gap_tol: f64,
    #[arg(long, default_value_t = 5000)]
    pub max_iters: usize,
    /// Gap trace CSV.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Certificate JSON; stdout otherwise.
    #[arg(long)]
    pub certificate: Option<PathBuf>,
    /// Plan CSV.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    #[arg(long)]
    pub duals_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BarycenterArgs {
    /// Two or more measure files.
    #[arg(required = true, num_args = 2..)]
    pub inputs: Vec<PathBuf>,
    /// Comma-separated weights summing to 1; uniform otherwise.
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    /// KL strength; marginal k uses weight_k * rho.
    #[arg(long, conflicts_with = "balanced")]
    pub rho: Option<f64>,
    /// Hard marginal constraints (inputs must share one mass).
    #[arg(long)]
    pub balanced: bool,
    #[arg(long, value_enum, default_value = "fw-ls")]
    pub method: Method,
    #[arg(long, default_value_t = 1e-6)]
    pub gap_tol: f64,
    #[arg(long, default_value_t = 5000)]
    pub max_iters: usize,
    /// Barycenter CSV; stdout otherwise.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Multimarginal plan CSV.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Certificate JSON; stderr otherwise.
    #[arg(long)]
    pub certificate: Option<PathBuf>,
    /// Gap trace CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Dual pair to check.
    #[arg(long)]
    pub duals: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Step of the lambda grid used by the norm oracles.
    #[arg(long, default_value_t = 1e-5)]
    pub grid_step: f64,
    /// Report JSON; stdout otherwise.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<Status> {
    let timing = !cli.no_timing;
    match cli.command {
        Command::Gen(a) => cmd_gen(&a),
        Command::Sinkhorn(a) => cmd_sinkhorn(&a, timing),
        Command::Rates(a) => cmd_rates(&a),
        Command::Uot1d(a) => cmd_uot1d(&a, timing),
        Command::Barycenter(a) => cmd_barycenter(&a, timing),
        Command::Certify(a) => cmd_certify(&a),
    }
}

fn clock(timing: bool) -> impl FnMut() -> u64 {
    let mut c = StdClock::new();
    move || if timing { uot_core::Clock::now_ns(&mut c) } else { 0 }
}

fn is_json(p: &Path) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn write_to(path: &Path, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

fn write_opt(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let mut w = io::output(path)?;
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn cmd_gen(a: &GenArgs) -> Result<Status> {
    let g = match a.kind {
        GenKind::Mixture => gen::mixture(
            a.n,
            a.seed,
            &MixtureParams {
                sigma: a.sigma,
                mu1: a.mu1,
                mu2: a.mu2,
                a: a.a,
                b: a.b,
            },
        )?,
        GenKind::Uniform => gen::uniform(a.n, a.seed, a.lo, a.hi, a.mass)?,
    };
    match &a.out {
        Some(path) => {
            write_to(path, |w| {
                if is_json(path) {
                    io::write_measure_json(w, &g.measure)
                } else {
                    io::write_measure(w, &g.measure, &g.meta)
                }
            })?;
            let mut sidecar = path.clone().into_os_string();
            sidecar.push(".meta.json");
            let mut meta: serde_json::Map<String, serde_json::Value> =
                g.meta.iter().map(|(k, v)| (k.clone(), v.clone().into())).collect();
            let now = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            meta.insert("created_unix".into(), now.into());
            meta.insert("uotkit_version".into(), env!("CARGO_PKG_VERSION").into());
            write_to(Path::new(&sidecar), |w| {
                serde_json::to_writer_pretty(&mut *w, &meta)?;
                writeln!(w)?;
                Ok(())
            })?;
        }
        None => write_opt(None, |w| io::write_measure(w, &g.measure, &g.meta))?,
    }
    Ok(Status::Converged)
}

pub fn cmd_sinkhorn(a: &SinkhornArgs, timing: bool) -> Result<Status> {
    ensure!(a.eps > 0.0, "--eps must be > 0");
    if a.variant == VariantArg::H && a.problem.entropy != EntropyKind::Kl {
        bail!("h-sinkhorn requires kl");
    }
    let prob = a.problem.problem(a.eps)?;
    let reference = a.reference.as_deref().map(io::read_duals).transpose()?;
    let config = SinkhornConfig {
        variant: a.variant.into(),
        max_iters: a.max_iters,
        tol: a.tol,
        anderson: a.anderson.then_some(AndersonConfig {
            depth: a.anderson_depth,
            reg: a.anderson_reg,
        }),
    };
    let report = sinkhorn::run(
        &prob,
        &config,
        &DualPair::zeros(prob.n(), prob.m()),
        reference.as_ref(),
        &mut clock(timing),
    )?;
    info!(
        "{:?}-sinkhorn: {} iterations, converged={}",
        config.variant, report.iterations, report.converged
    );
    write_opt(a.out.as_deref(), |w| io::write_trace(w, &report.trace))?;
    if let Some(p) = &a.duals_out {
        write_to(p, |w| io::write_duals(w, &report.final_pair))?;
    }
    if !report.converged {
        warn!("iteration budget of {} exhausted", a.max_iters);
    }
    Ok(Status::from_flag(report.converged))
}

/// One row of `rates`: `None` for variants that were not requested.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub rho: f64,
    pub kappa: [Option<f64>; 3],
    pub error: Option<String>,
}

/// Reference from F-Sinkhorn at tolerance `1e-12`, then the rate of each variant's `err_f` trace.
pub fn rate_row(a: &DiscreteMeasure, b: &DiscreteMeasure, p: f64, eps: f64, rho: f64, variants: &[Variant], max_iters: usize) -> RateRow {
    let row = || -> Result<[Option<f64>; 3]> {
        let prob = UotProblem::new(a.clone(), b.clone(), CostSpec::power(p)?, Entropy::kl(rho)?, Entropy::kl(rho)?, eps)?;
        let zero = DualPair::zeros(prob.n(), prob.m());
        let mut cfg = SinkhornConfig::new(Variant::F);
        cfg.tol = 1e-12;
        cfg.max_iters = max_iters;
        let reference = sinkhorn::run(&prob, &cfg, &zero, None, &mut uot_core::NoClock)?;
        ensure!(reference.converged, "reference run did not reach 1e-12");
        let mut out = [None; 3];
        for (slot, v) in [Variant::F, Variant::G, Variant::H].into_iter().enumerate() {
            if !variants.contains(&v) {
                continue;
            }
            cfg.variant = v;
            let r = sinkhorn::run(&prob, &cfg, &zero, Some(&reference.final_pair), &mut uot_core::NoClock)?;
            out[slot] = Some(estimate_rate(&r.err_f())?);
        }
        Ok(out)
    };
    match row() {
        Ok(kappa) => RateRow { rho, kappa, error: None },
        Err(e) => RateRow {
            rho,
            kappa: [None; 3],
            error: Some(format!("{e:#}")),
        },
    }
}

pub fn cmd_rates(a: &RatesArgs) -> Result<Status> {
    ensure!(!a.rho_grid.is_empty(), "--rho-grid is empty");
    ensure!(a.eps > 0.0, "--eps must be > 0");
    ensure!(a.jobs >= 1, "--jobs must be >= 1");
    let alpha = io::read_measure(&a.alpha)?;
    let beta = io::read_measure(&a.beta)?;
    let variants: Vec<Variant> = a.variants.iter().map(|&v| v.into()).collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.jobs).build()?;
    let rows: Vec<RateRow> = pool.install(|| {
        a.rho_grid
            .par_iter()
            .map(|&rho| rate_row(&alpha, &beta, a.p, a.eps, rho, &variants, a.max_iters))
            .collect()
    });
    let mut failed = false;
    write_opt(a.out.as_deref(), |w| {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["rho", "kappa_f", "kappa_g", "kappa_h", "status"])?;
        for r in &rows {
            let k = |i: usize| r.kappa[i].map(io::fmt_f).unwrap_or_default();
            let status = match &r.error {
                Some(e) => {
                    failed = true;
                    warn!("rho={}: {e}", r.rho);
                    format!("error: {e}")
                }
                None => "ok".into(),
            };
            wr.write_record([io::fmt_f(r.rho), k(0), k(1), k(2), status])?;
        }
        wr.flush()?;
        Ok(())
    })?;
    Ok(Status::from_flag(!failed))
}

pub fn cmd_uot1d(a: &Uot1dArgs, timing: bool) -> Result<Status> {
    ensure!(a.problem.entropy != EntropyKind::Balanced, "uot1d needs kl or berg marginals");
    let prob = a.problem.problem(0.0)?;
    let cfg = FwConfig {
        step: a.method.into(),
        max_iters: a.max_iters,
        gap_tol: a.gap_tol,
    };
    let report = fw_solve(&prob, &cfg, &default_init(&prob), None, &mut clock(timing))?;
    info!(
        "{:?}: {} iterations, gap {:e}, passed={}",
        a.method, report.iterations, report.certificate.gap, report.certificate.passed
    );
    if let Some(p) = &a.out {
        write_to(p, |w| io::write_fw_trace(w, &report.trace))?;
    }
    if let Some(p) = &a.plan {
        write_to(p, |w| io::write_plan(w, &report.plan))?;
    }
    if let Some(p) = &a.duals_out {
        write_to(p, |w| io::write_duals(w, &report.final_pair))?;
    }
    write_opt(a.certificate.as_deref(), |w| io::write_certificate(w, &report.certificate))?;
    Ok(Status::from_flag(report.certificate.passed))
}

pub fn cmd_barycenter(a: &BarycenterArgs, timing: bool) -> Result<Status> {
    ensure!(a.balanced || a.rho.is_some(), "pass --rho or --balanced");
    let inputs = a.inputs.iter().map(|p| io::read_measure(p)).collect::<Result<Vec<_>>>()?;
    let k = inputs.len();
    let weights = a.weights.clone().unwrap_or_else(|| vec![1.0 / k as f64; k]);
    let rho = if a.balanced { None } else { a.rho };
    let prob = BarycenterProblem::new(inputs, weights, rho)?;
    let (plan, cert, trace) = if a.balanced {
        let (plan, _, cert) = barycenter::balanced_barycenter(&prob)?;
        (plan, cert, Vec::new())
    } else {
        let cfg = FwConfig {
            step: a.method.into(),
            max_iters: a.max_iters,
            gap_tol: a.gap_tol,
        };
        let dims: Vec<usize> = prob.inputs.iter().map(|m| m.len()).collect();
        let r = barycenter::fw_barycenter(&prob, &cfg, &MultiDual::zeros(&dims), &mut clock(timing))?;
        info!("barycenter: {} iterations, gap {:e}", r.iterations, r.certificate.gap);
        (r.plan, r.certificate, r.trace)
    };
    let bar = barycenter::extract_barycenter(&plan, &prob.inputs, &prob.weights)?;
    write_opt(a.out.as_deref(), |w| io::write_measure(w, &bar, &[]))?;
    if let Some(p) = &a.plan {
        write_to(p, |w| io::write_multiplan(w, &plan))?;
    }
    if let Some(p) = &a.trace {
        write_to(p, |w| io::write_fw_trace(w, &trace))?;
    }
    match &a.certificate {
        Some(p) => write_to(p, |w| io::write_certificate(w, &cert))?,
        None => io::write_certificate(std::io::stderr().lock(), &cert)?,
    }
    Ok(Status::from_flag(cert.passed))
}

/// Output of `certify`.
#[derive(Debug, Clone, Serialize)]
pub struct CertifyReport {
    pub certificate: io::CertificateJson,
    pub lambda_star: Option<f64>,
    pub lambda_oracle: Option<f64>,
    pub hilbert_norm_f: f64,
    pub hilbert_grid_f: f64,
    pub double_star_norm: f64,
    pub double_star_grid: f64,
    pub passed: bool,
}

/// Certificate of `d`: the plan is the entropic primal plan for `ε > 0`,
/// otherwise the exact 1-D plan between the updated marginals.
pub fn certify_pair(prob: &UotProblem, d: &DualPair, tol: f64) -> Result<Certificate> {
    let dual = eval_h(prob, d)?;
    if prob.eps > 0.0 {
        let plan = sinkhorn::primal_plan(prob, d)?;
        return Ok(assemble_certificate(eval_primal(prob, &plan)?, dual, 0.0, tol));
    }
    let (at, bt) = updated_marginals(prob, d)?;
    let a = prob.alpha.reweighted(at)?;
    let b = prob.beta.reweighted(bt)?;
    let (plan, _) = solve_ot_1d(&a, &b, &prob.cost)?;
    let viol = duality::dual_violation(prob, d).max(0.0);
    Ok(assemble_certificate(eval_primal(prob, &plan)?, dual, viol, tol))
}

pub fn cmd_certify(a: &CertifyArgs) -> Result<Status> {
    ensure!(a.grid_step > 0.0, "--grid-step must be > 0");
    let prob = a.problem.problem(a.eps)?;
    let d = io::read_duals(&a.duals)?;
    let certificate = certify_pair(&prob, &d, a.tol)?;
    let (lambda_star, lambda_oracle) = match lambda_star(&prob, &d) {
        Ok(l) => {
            let reach = 10.0 * (1.0 + sup(&d.f) + sup(&d.g) + l.abs());
            let (x, _) = certify::scalar_max_oracle(|t| eval_g(&prob, &d, t).unwrap_or(f64::NEG_INFINITY), -reach, reach, 1e-10)?;
            (Some(l), Some(x))
        }
        Err(CoreError::TranslationUndefined) => (None, None),
        Err(e) => return Err(e.into()),
    };
    let r = 1.0 + sup(&d.f) + sup(&d.g);
    let hn = certify::hilbert_norm(&d.f);
    let hg = certify::grid_min_hilbert(&d.f, -r, r, a.grid_step);
    let dn = certify::double_star_norm(&d.f, &d.g);
    let dg = certify::grid_min_double_star(&d.f, &d.g, -r, r, a.grid_step);
    let lambda_ok = match (lambda_star, lambda_oracle) {
        (Some(l), Some(o)) => (l - o).abs() <= 1e-6 * (1.0 + l.abs()),
        _ => true,
    };
    let norms_ok = (hn - hg).abs() <= a.grid_step && (dn - dg).abs() <= 2.0 * a.grid_step;
    let report = CertifyReport {
        certificate: (&certificate).into(),
        lambda_star,
        lambda_oracle,
        hilbert_norm_f: hn,
        hilbert_grid_f: hg,
        double_star_norm: dn,
        double_star_grid: dg,
        passed: certificate.passed && lambda_ok && norms_ok,
    };
    write_opt(a.out.as_deref(), |w| {
        serde_json::to_writer_pretty(&mut *w, &report)?;
        writeln!(w)?;
        Ok(())
    })?;
    Ok(Status::from_flag(report.passed))
}

fn sup(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}
