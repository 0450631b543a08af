//! Least energy solutions.
//!
//! Both cases reduce to one scale-free problem. Along the ray `t u` the
//! energy is stationary at `t = (b/(c-a))^{1/(p-q)}` (same `a, b, c` as in
//! [`crate::energy`]), where it equals `(1/q - 1/p) t^q b`. Minimizing that
//! value over directions is the same as minimizing
//!
//! `Phi(u) = p ln b - q ln(c - a)`,
//!
//! for `q < p` (Nehari minimization) and for `q > p` (global minimization,
//! the fiber minimum being negative). `Phi` is invariant under `u -> c u`, so
//! iterates are kept at sup-norm 1 and the scaling is applied once at the end.
//!
//! The sup-norm is first replaced by L^r norms of growing `r`. A final stage
//! fixes the maximum node at 1 inside the box `[0, 1]`, which makes the exact
//! sup-norm constant and the objective smooth again.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{cone_function, GridDomain, GridFunction, DIM};
use crate::energy::{
    argmax_set, fiber_scale, log_lr_norm_grad, random_positive_start, rayleigh_min, EnergyKernels,
    EnergyParts, EnergySpec, DEFAULT_ARGMAX_TOL,
};
use crate::error::{Error, Result};
use crate::logspace::{log_sub_exp, log_sum_exp};
use crate::optimize::{minimize, Bounds, LbfgsReport, LbfgsSettings, Objective};
use crate::seminorm::{PairDiffs, SeminormKernel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    Cone,
    Warm(Vec<f64>),
    RandomPositive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOpts {
    /// Iteration cap of each optimization stage.
    pub max_iters: usize,
    /// Tolerance on `max |projected gradient| / (m h^N)` at unit sup-norm.
    pub grad_tol: f64,
    pub shrink: f64,
    pub armijo: f64,
    /// L-BFGS history length.
    pub memory: usize,
    /// Surrogate exponents as multiples of the leading exponent.
    pub r_multipliers: Vec<f64>,
    pub init: Init,
    pub seed: u64,
    /// Random starts added to the cone in [`rayleigh_min`].
    pub random_starts: usize,
    /// Finish with the exact sup-norm stage.
    pub exact_polish: bool,
}

impl Default for SolverOpts {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            grad_tol: 1e-6,
            shrink: 0.5,
            armijo: 1e-4,
            memory: 10,
            r_multipliers: vec![2.0, 4.0, 8.0],
            init: Init::Cone,
            seed: 0,
            random_starts: 3,
            exact_polish: true,
        }
    }
}

impl SolverOpts {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.max_iters == 0 {
            return bad("max_iters must be positive".into());
        }
        if !(self.grad_tol > 0.0) {
            return bad(format!("grad_tol must be positive, got {}", self.grad_tol));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return bad(format!("shrink must lie in (0,1), got {}", self.shrink));
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return bad(format!("armijo must lie in (0,1), got {}", self.armijo));
        }
        if self.memory == 0 {
            return bad("memory must be positive".into());
        }
        if self.r_multipliers.is_empty()
            || self
                .r_multipliers
                .iter()
                .any(|r| !(*r >= 1.0 && r.is_finite()))
        {
            return bad("r_multipliers must be a nonempty list of finite values >= 1".into());
        }
        if self.r_multipliers.windows(2).any(|w| w[1] < w[0]) {
            return bad("r_multipliers must be nondecreasing".into());
        }
        Ok(())
    }

    pub(crate) fn lbfgs(&self, grad_scale: f64) -> LbfgsSettings {
        LbfgsSettings {
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            grad_scale,
            memory: self.memory,
            shrink: self.shrink,
            armijo: self.armijo,
            ..LbfgsSettings::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub u: GridFunction,
    pub x_u: usize,
    /// Nodes within the argmax tolerance of the maximum.
    pub argmax: Vec<usize>,
    pub sup_norm: f64,
    pub semi_alpha: f64,
    pub semi_beta: f64,
    pub energy: f64,
    pub nehari_residual: f64,
    pub stationarity: f64,
    pub iterations: usize,
    pub r_final: f64,
    /// Surrogate least energy at the end of each L^r stage.
    pub stage_energies: Vec<f64>,
    /// Scaled projected gradient at the end of the last stage.
    pub grad_norm: f64,
}

#[derive(Debug, Clone, Copy)]
enum NormMode {
    Surrogate(f64),
    /// Exact sup-norm attained at this (fixed) slot.
    Pinned(usize),
}

/// `Phi = p ln b - q ln(c - a)` and its gradient.
struct Reduced<'a> {
    k: &'a EnergyKernels,
    mode: NormMode,
    ga: Vec<f64>,
    gb: Vec<f64>,
    gn: Vec<f64>,
}

impl<'a> Reduced<'a> {
    fn new(k: &'a EnergyKernels, mode: NormMode) -> Self {
        let n = k.alpha.domain().interior_count();
        Self {
            k,
            mode,
            ga: vec![0.0; n],
            gb: vec![0.0; n],
            gn: vec![0.0; n],
        }
    }
}

impl Objective for Reduced<'_> {
    fn eval(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        let es = &self.k.spec;
        let (p, q) = (es.p, es.q);
        let diffs = PairDiffs::new(x);
        let la = self.k.alpha.log_power_and_grad(x, &diffs, &mut self.ga);
        let lb = self.k.beta.log_power_and_grad(x, &diffs, &mut self.gb);
        let ln_norm = match self.mode {
            NormMode::Surrogate(r) => log_lr_norm_grad(x, r, self.k.alpha.domain().h, &mut self.gn),
            NormMode::Pinned(top) => {
                self.gn.iter_mut().for_each(|g| *g = 0.0);
                self.gn[top] = 1.0 / x[top];
                x[top].ln()
            }
        };
        let lc = es.log_mu + p * ln_norm;
        if lb == f64::NEG_INFINITY || !(la < lc) {
            return f64::INFINITY;
        }
        let gap = log_sub_exp(lc, la);
        let ra = (la - gap).exp();
        let rc = (lc - gap).exp();
        for (i, g) in grad.iter_mut().enumerate() {
            *g = p * self.gb[i] - q * (rc * p * self.gn[i] - ra * self.ga[i]);
        }
        p * lb - q * gap
    }
}

fn normalize(v: &mut [f64]) {
    let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if m > 0.0 {
        v.iter_mut().for_each(|x| *x /= m);
    }
}

fn first_argmax(v: &[f64]) -> usize {
    let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    v.iter().position(|x| x.abs() == m).unwrap_or(0)
}

/// Energy of the fiber-optimal multiple of `u` for the given parts, i.e.
/// `(1/q - 1/p) t^q b`.
fn fiber_energy(parts: &EnergyParts, p: f64, q: f64) -> Option<f64> {
    let t = fiber_scale(parts, p, q)?;
    Some((1.0 / q - 1.0 / p) * (q * t.ln() + parts.log_b).exp())
}

fn initial_values(dom: &Arc<GridDomain>, opts: &SolverOpts) -> Result<Vec<f64>> {
    let v = match &opts.init {
        Init::Cone => cone_function(dom, dom.deepest[0])?.into_values(),
        Init::RandomPositive => random_positive_start(dom, opts.seed).into_values(),
        Init::Warm(v) => {
            if v.len() != dom.interior_count() {
                return Err(Error::DomainMismatch);
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParams(
                    "warm start contains non-finite values".into(),
                ));
            }
            v.iter().map(|x| x.abs()).collect()
        }
    };
    if v.iter().all(|&x| x == 0.0) {
        return Err(Error::ZeroFunction);
    }
    Ok(v)
}

/// Least energy solution of the problem `es` on `dom`.
pub fn solve_least_energy(
    es: &EnergySpec,
    dom: &Arc<GridDomain>,
    opts: &SolverOpts,
) -> Result<SolveResult> {
    opts.validate()?;
    let k = EnergyKernels::new(dom, es)?;
    let (p, q) = (es.p, es.q);
    let n = dom.interior_count();
    let hn = dom.h.powi(DIM as i32);
    let scale = 1.0 / (p.max(q) * hn);

    let mut u = initial_values(dom, opts)?;
    normalize(&mut u);
    let start = k.parts(&u, false);
    if !(start.log_a < start.log_c) {
        // the cone is not admissible; try the Rayleigh minimizer before giving up
        let quick = SolverOpts {
            random_starts: 0,
            ..opts.clone()
        };
        let (lambda, e) = rayleigh_min(&es.fp_alpha, dom, &quick)?;
        let ep = k.parts(e.values(), false);
        if !(ep.log_a < ep.log_c) {
            return Err(Error::MuBelowThreshold {
                mu: es.mu(),
                lambda,
            });
        }
        u = e.into_values();
    }

    let mut iterations = 0;
    let mut stage_energies = Vec::new();
    let mut r_final = f64::NAN;
    let mut last: Option<LbfgsReport> = None;
    for &mult in &opts.r_multipliers {
        let r = (mult * p).max(p.max(q));
        let surrogate = k.spec.with_r(r);
        let sk = EnergyKernels {
            spec: surrogate,
            alpha: k.alpha.clone(),
            beta: k.beta.clone(),
        };
        if fiber_energy(&sk.parts(&u, true), p, q).is_none() {
            continue;
        }
        let mut obj = Reduced::new(&sk, NormMode::Surrogate(r));
        let rep = minimize(&mut obj, u, &Bounds::nonnegative(n), &opts.lbfgs(scale));
        u = rep.x.clone();
        normalize(&mut u);
        iterations += rep.iterations;
        r_final = r;
        if let Some(e) = fiber_energy(&sk.parts(&u, true), p, q) {
            stage_energies.push(e);
        }
        last = Some(rep);
    }
    if opts.exact_polish || last.is_none() {
        let top = first_argmax(&u);
        let mut bounds = Bounds::nonnegative(n);
        bounds.upper.iter_mut().for_each(|x| *x = 1.0);
        bounds.fix(top, 1.0);
        let mut obj = Reduced::new(&k, NormMode::Pinned(top));
        let rep = minimize(&mut obj, u, &bounds, &opts.lbfgs(scale));
        u = rep.x.clone();
        iterations += rep.iterations;
        last = Some(rep);
    }
    let last = last.expect("at least one stage ran");
    if !(last.converged || last.stalled) {
        return Err(Error::NoConvergence(format!(
            "scaled projected gradient {:.3e} above tolerance {:.3e} after {} iterations",
            last.grad_norm, opts.grad_tol, last.iterations
        )));
    }

    let parts = k.parts(&u, false);
    let t = fiber_scale(&parts, p, q).ok_or(Error::NotProjectable)?;
    let u = GridFunction::new(dom.clone(), u.iter().map(|x| t * x).collect())?;
    let parts = k.parts(u.values(), false);
    let energy = parts.energy(p, q)?;
    let (argmax, x_u) = argmax_set(&u, DEFAULT_ARGMAX_TOL)?;
    let exclude = dom.nodes_within(&argmax, neighborhood_radius(dom));
    let stationarity = stationarity_with(&k.alpha, &k.beta, u.values(), &exclude);
    Ok(SolveResult {
        x_u,
        sup_norm: u.at_node(x_u),
        semi_alpha: (parts.log_a / p).exp(),
        semi_beta: (parts.log_b / q).exp(),
        energy,
        nehari_residual: parts.nehari_residual(),
        stationarity,
        iterations,
        r_final,
        stage_energies,
        grad_norm: last.grad_norm,
        argmax,
        u,
    })
}

/// Radius of the 8-neighborhood of a node.
pub fn neighborhood_radius(dom: &GridDomain) -> f64 {
    dom.h * 2f64.sqrt() * (1.0 + 1e-9)
}

fn stationarity_with(
    ka: &SeminormKernel,
    kb: &SeminormKernel,
    u: &[f64],
    exclude: &[usize],
) -> f64 {
    let dom = ka.domain();
    let logs: Vec<[f64; 4]> = (0..u.len())
        .map(|i| {
            let (ap, an) = ka.pointwise_log_parts(u, i);
            let (bp, bn) = kb.pointwise_log_parts(u, i);
            [ap, an, bp, bn]
        })
        .collect();
    let shift = log_sum_exp(&logs.iter().flatten().copied().collect::<Vec<_>>());
    if shift == f64::NEG_INFINITY {
        return 0.0;
    }
    let sums: Vec<f64> = logs
        .iter()
        .map(|l| {
            let e = |x: f64| (x - shift).exp();
            (e(l[0]) - e(l[1]) + e(l[2]) - e(l[3])).abs()
        })
        .collect();
    let total = sums.iter().fold(0.0f64, |m, &x| m.max(x));
    if total == 0.0 {
        return 0.0;
    }
    let nodes = dom.interior_nodes();
    let kept = sums
        .iter()
        .zip(nodes)
        .filter(|(_, k)| exclude.binary_search(k).is_err())
        .fold(0.0f64, |m, (&x, _)| m.max(x));
    kept / total
}

/// Largest `|L_{alpha,p} u + L_{beta,q} u|` over interior nodes outside
/// `exclude`, relative to the largest over all nodes. Lies in `[0, 1]`.
pub fn stationarity_residual(u: &GridFunction, es: &EnergySpec, exclude: &[usize]) -> Result<f64> {
    if u.is_zero() {
        return Ok(0.0);
    }
    let ka = SeminormKernel::new(u.domain(), es.fp_alpha)?;
    let kb = SeminormKernel::new(u.domain(), es.fp_beta)?;
    let mut ex = exclude.to_vec();
    ex.sort_unstable();
    Ok(stationarity_with(&ka, &kb, u.values(), &ex))
}
