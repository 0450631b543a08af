//! The energy functional, its smooth L^r surrogate, the sup-norm argmax set,
//! the Nehari projection and the Rayleigh-type quotient `lambda_{s,m}`.
//!
//! With `a = [u]_{alpha,p}^p`, `b = [u]_{beta,q}^q` and `c = mu |u|^p`
//! (sup-norm or discrete L^r norm) the energy reads
//! `E(u) = a/p + b/q - c/p`. Every quantity is carried as a logarithm.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{cone_function, GridDomain, GridFunction, DIM};
use crate::error::{Error, Result};
use crate::logspace::{ln_abs_floored, log_sub_exp, log_sum_exp};
use crate::optimize::{minimize, Bounds, Objective};
use crate::seminorm::{default_truncation, FracParams, PairDiffs, SeminormKernel};
use crate::solver::SolverOpts;

/// Which ordering of orders and exponents the problem satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    /// `0 < alpha < beta < 1` and `N/alpha < p < q`: the energy is coercive.
    H1b,
    /// `0 < beta < alpha < 1` and `N/beta < q < p`: minimize on the Nehari set.
    H1a,
}

/// Problem data of one (p,q) problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySpec {
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub q: f64,
    /// `ln mu`; `mu` itself may be far outside the f64 range.
    pub log_mu: f64,
    /// Exponent of the L^r surrogate of the sup-norm.
    pub r: f64,
    pub case: Case,
    pub fp_alpha: FracParams,
    pub fp_beta: FracParams,
}

impl EnergySpec {
    pub fn new(
        alpha: f64,
        beta: f64,
        p: f64,
        q: f64,
        mu: f64,
        r: f64,
        domain: &GridDomain,
    ) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "mu must be positive, got {mu}"
            )));
        }
        Self::with_log_mu(alpha, beta, p, q, mu.ln(), r, domain)
    }

    pub fn with_log_mu(
        alpha: f64,
        beta: f64,
        p: f64,
        q: f64,
        log_mu: f64,
        r: f64,
        domain: &GridDomain,
    ) -> Result<Self> {
        let case = classify(alpha, beta, p, q)?;
        if !log_mu.is_finite() {
            return Err(Error::InvalidParams(
                "mu must be positive and finite".into(),
            ));
        }
        if !(r >= p.max(q)) {
            return Err(Error::InvalidParams(format!(
                "surrogate exponent r = {r} must be at least max(p, q) = {}",
                p.max(q)
            )));
        }
        let t = default_truncation(domain);
        let fp_alpha = FracParams::new(alpha, p, t, true)?;
        let fp_beta = FracParams::new(beta, q, t, true)?;
        fp_alpha.validate_for(domain)?;
        Ok(Self {
            alpha,
            beta,
            p,
            q,
            log_mu,
            r,
            case,
            fp_alpha,
            fp_beta,
        })
    }

    pub fn mu(&self) -> f64 {
        self.log_mu.exp()
    }

    /// Same problem with another surrogate exponent.
    pub fn with_r(&self, r: f64) -> Self {
        Self {
            r: r.max(self.p.max(self.q)),
            ..self.clone()
        }
    }
}

/// Determines the case from the orders and exponents, rejecting anything else.
pub fn classify(alpha: f64, beta: f64, p: f64, q: f64) -> Result<Case> {
    let n = DIM as f64;
    let in_unit = |s: f64| s > 0.0 && s < 1.0;
    if !(in_unit(alpha) && in_unit(beta)) {
        return Err(Error::InvalidParams(format!(
            "orders must lie in (0,1), got alpha = {alpha}, beta = {beta}"
        )));
    }
    if alpha < beta && n / alpha < p && p < q {
        Ok(Case::H1b)
    } else if beta < alpha && n / beta < q && q < p {
        Ok(Case::H1a)
    } else {
        Err(Error::InvalidParams(format!(
            "(alpha, beta, p, q) = ({alpha}, {beta}, {p}, {q}) satisfies neither \
             0<alpha<beta<1, N/alpha<p<q nor 0<beta<alpha<1, N/beta<q<p"
        )))
    }
}

/// Both seminorm kernels of a problem on one domain.
#[derive(Debug, Clone)]
pub struct EnergyKernels {
    pub spec: EnergySpec,
    pub alpha: SeminormKernel,
    pub beta: SeminormKernel,
}

/// Log-scale ingredients of the energy at one function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts {
    /// `ln [u]_{alpha,p}^p`
    pub log_a: f64,
    /// `ln [u]_{beta,q}^q`
    pub log_b: f64,
    /// `ln (mu |u|^p)` with the norm used for this evaluation.
    pub log_c: f64,
}

impl EnergyParts {
    pub fn energy(&self, p: f64, q: f64) -> Result<f64> {
        let term = |l: f64, what: &'static str| {
            if l > f64::MAX.ln() {
                Err(Error::Overflow(what))
            } else {
                Ok(l.exp())
            }
        };
        Ok(
            term(self.log_a, "[u]_(alpha,p)^p")? / p + term(self.log_b, "[u]_(beta,q)^q")? / q
                - term(self.log_c, "mu |u|^p")? / p,
        )
    }

    /// `|a + b - c| / c`.
    pub fn nehari_residual(&self) -> f64 {
        ((self.log_a - self.log_c).exp() + (self.log_b - self.log_c).exp() - 1.0).abs()
    }
}

impl EnergyKernels {
    pub fn new(domain: &Arc<GridDomain>, spec: &EnergySpec) -> Result<Self> {
        Ok(Self {
            spec: spec.clone(),
            alpha: SeminormKernel::new(domain, spec.fp_alpha)?,
            beta: SeminormKernel::new(domain, spec.fp_beta)?,
        })
    }

    pub fn parts(&self, u: &[f64], surrogate: bool) -> EnergyParts {
        let diffs = PairDiffs::new(u);
        let log_norm = if surrogate {
            log_lr_norm(u, self.spec.r, self.alpha.domain().h)
        } else {
            ln_abs_floored(sup_abs(u))
        };
        EnergyParts {
            log_a: self.alpha.log_power_with(u, &diffs),
            log_b: self.beta.log_power_with(u, &diffs),
            log_c: self.spec.log_mu + self.spec.p * log_norm,
        }
    }
}

fn sup_abs(u: &[f64]) -> f64 {
    u.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `ln` of the discrete L^r norm `(sum |u_i|^r h^N)^{1/r}`.
pub fn log_lr_norm(u: &[f64], r: f64, h: f64) -> f64 {
    let log_hn = DIM as f64 * h.ln();
    let terms: Vec<f64> = u.iter().map(|&v| r * ln_abs_floored(v) + log_hn).collect();
    log_sum_exp(&terms) / r
}

/// Writes `grad ln |u|_r` into `grad`; returns `ln |u|_r`.
pub fn log_lr_norm_grad(u: &[f64], r: f64, h: f64, grad: &mut [f64]) -> f64 {
    let log_hn = DIM as f64 * h.ln();
    let terms: Vec<f64> = u.iter().map(|&v| r * ln_abs_floored(v) + log_hn).collect();
    let total = log_sum_exp(&terms);
    for (g, (&v, &t)) in grad.iter_mut().zip(u.iter().zip(&terms)) {
        *g = if t == f64::NEG_INFINITY {
            0.0
        } else {
            (t - total).exp() / v
        };
    }
    total / r
}

/// The energy `E_mu(u)`; `surrogate` swaps the sup-norm for the L^r norm.
pub fn energy_eval(u: &GridFunction, es: &EnergySpec, surrogate: bool) -> Result<f64> {
    if u.is_zero() {
        return Ok(0.0);
    }
    let k = EnergyKernels::new(u.domain(), es)?;
    k.parts(u.values(), surrogate).energy(es.p, es.q)
}

/// Gradient of the surrogate energy.
pub fn energy_grad(u: &GridFunction, es: &EnergySpec) -> Result<GridFunction> {
    if u.is_zero() {
        return Err(Error::ZeroFunction);
    }
    let k = EnergyKernels::new(u.domain(), es)?;
    let vals = u.values();
    let n = vals.len();
    let diffs = PairDiffs::new(vals);
    let mut ga = vec![0.0; n];
    let mut gb = vec![0.0; n];
    let la = k.alpha.log_power_and_grad(vals, &diffs, &mut ga);
    let lb = k.beta.log_power_and_grad(vals, &diffs, &mut gb);
    let mut gn = vec![0.0; n];
    let log_norm = log_lr_norm_grad(vals, es.r, u.domain().h, &mut gn);
    // d/du (mu/p) |u|_r^p = mu |u|_r^p grad ln|u|_r
    let lc = es.log_mu + es.p * log_norm;
    let (wa, wb, wc) = ((la - es.p.ln()).exp(), (lb - es.q.ln()).exp(), lc.exp());
    let grad = (0..n)
        .map(|i| wa * ga[i] + wb * gb[i] - wc * gn[i])
        .collect();
    GridFunction::new(u.domain().clone(), grad)
}

/// Default relative tolerance of [`argmax_set`].
pub const DEFAULT_ARGMAX_TOL: f64 = 1e-6;

/// Nodes where `|u|` is within `tol` (relative) of its maximum, and the first of them.
pub fn argmax_set(u: &GridFunction, tol: f64) -> Result<(Vec<usize>, usize)> {
    let max = u.sup_norm();
    if max == 0.0 {
        return Err(Error::ZeroFunction);
    }
    let nodes = u.domain().interior_nodes();
    let gamma: Vec<usize> = u
        .values()
        .iter()
        .zip(nodes)
        .filter(|(v, _)| v.abs() >= (1.0 - tol) * max)
        .map(|(_, &k)| k)
        .collect();
    let first = gamma[0];
    Ok((gamma, first))
}

/// One-sided difference quotient of `v -> |u + eps v|_inf^p / p` against the
/// derivative formula `max over argmax nodes of |u|^{p-2} u v`.
pub fn gateaux_supnorm_check(
    u: &GridFunction,
    v: &GridFunction,
    p: f64,
    eps: f64,
) -> Result<(f64, f64)> {
    if !u.same_domain(v) {
        return Err(Error::DomainMismatch);
    }
    let (gamma, _) = argmax_set(u, DEFAULT_ARGMAX_TOL)?;
    let shifted: Vec<f64> = u
        .values()
        .iter()
        .zip(v.values())
        .map(|(a, b)| a + eps * b)
        .collect();
    let n0 = u.sup_norm();
    let n1 = sup_abs(&shifted);
    let lhs = (n1.powf(p) - n0.powf(p)) / (p * eps);
    let rhs = gamma
        .iter()
        .map(|&k| {
            let ui = u.at_node(k);
            ui.abs().powf(p - 2.0) * ui * v.at_node(k)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((lhs, rhs))
}

/// Scaling `t` that puts `t u` on the Nehari set:
/// `t = (b / (c - a))^{1/(p-q)}`, or `None` when `a >= c`.
pub fn fiber_scale(parts: &EnergyParts, p: f64, q: f64) -> Option<f64> {
    if !(parts.log_a < parts.log_c) {
        return None;
    }
    let gap = log_sub_exp(parts.log_c, parts.log_a);
    Some(((parts.log_b - gap) / (p - q)).exp())
}

/// Projection onto the Nehari set along the ray through `u` (case H1a).
pub fn nehari_project(u: &GridFunction, es: &EnergySpec) -> Result<(f64, GridFunction)> {
    if es.case != Case::H1a {
        return Err(Error::WrongCase(
            "the Nehari projection is defined for q < p",
        ));
    }
    if u.is_zero() {
        return Err(Error::NotProjectable);
    }
    let k = EnergyKernels::new(u.domain(), es)?;
    let parts = k.parts(u.values(), false);
    let t = fiber_scale(&parts, es.p, es.q).ok_or(Error::NotProjectable)?;
    Ok((t, u.scaled(t)))
}

/// Rayleigh quotient of the exact sup-norm for a fixed max node, or of the
/// L^r surrogate, in log form.
struct RayleighObjective<'a> {
    kernel: &'a SeminormKernel,
    /// `Some(r)`: `ln a - m ln |u|_r`; `None`: `ln a` (sup pinned elsewhere).
    surrogate_r: Option<f64>,
    buf: Vec<f64>,
}

impl Objective for RayleighObjective<'_> {
    fn eval(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        let diffs = PairDiffs::new(x);
        let la = self.kernel.log_power_and_grad(x, &diffs, grad);
        if la == f64::NEG_INFINITY {
            return f64::INFINITY;
        }
        match self.surrogate_r {
            None => la,
            Some(r) => {
                let m = self.kernel.params().m;
                let h = self.kernel.domain().h;
                let ln_norm = log_lr_norm_grad(x, r, h, &mut self.buf);
                for (g, b) in grad.iter_mut().zip(&self.buf) {
                    *g -= m * b;
                }
                la - m * ln_norm
            }
        }
    }
}

/// Random positive start: the distance field times uniform noise in [0.5, 1.5).
pub fn random_positive_start(domain: &Arc<GridDomain>, seed: u64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vals = domain
        .interior_nodes()
        .iter()
        .map(|&k| domain.distance[k] * rng.gen_range(0.5..1.5))
        .collect();
    GridFunction::new(domain.clone(), vals).expect("finite start")
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let m = sup_abs(&v);
    if m > 0.0 {
        v.iter_mut().for_each(|x| *x /= m);
    }
    v
}

fn first_argmax(v: &[f64]) -> usize {
    let m = sup_abs(v);
    v.iter().position(|x| x.abs() == m).unwrap_or(0)
}

/// Estimate of `lambda_{s,m} = min [u]_{s,m}^m / |u|_inf^m`.
///
/// Each start is driven down the L^r surrogate quotient along the r schedule,
/// then polished on the exact quotient with its maximum node pinned at 1.
/// The best exact quotient over all starts and all visited candidates wins;
/// the minimizer is returned with sup-norm 1.
pub fn rayleigh_min(
    fp: &FracParams,
    dom: &Arc<GridDomain>,
    opts: &SolverOpts,
) -> Result<(f64, GridFunction)> {
    let kernel = SeminormKernel::new(dom, *fp)?;
    let m = fp.m;
    let n = dom.interior_count();
    let hn = dom.h.powi(DIM as i32);
    let mut starts = vec![cone_function(dom, dom.deepest[0])?.into_values()];
    for k in 0..opts.random_starts {
        starts.push(random_positive_start(dom, opts.seed.wrapping_add(k as u64)).into_values());
    }
    let exact_log_quotient = |v: &[f64]| kernel.log_power(v) - m * sup_abs(v).ln();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut consider = |lq: f64, v: &[f64]| {
        if lq.is_finite() && best.as_ref().is_none_or(|(b, _)| lq < *b) {
            best = Some((lq, normalized(v.to_vec())));
        }
    };
    let mut converged_any = false;
    for start in starts {
        let mut u = normalized(start);
        consider(exact_log_quotient(&u), &u);
        for &mult in &opts.r_multipliers {
            let r = (mult * m).max(m);
            let mut obj = RayleighObjective {
                kernel: &kernel,
                surrogate_r: Some(r),
                buf: vec![0.0; n],
            };
            let settings = opts.lbfgs(1.0 / (hn * m));
            let rep = minimize(&mut obj, u, &Bounds::nonnegative(n), &settings);
            u = normalized(rep.x);
        }
        consider(exact_log_quotient(&u), &u);
        if opts.exact_polish {
            let top = first_argmax(&u);
            let mut bounds = Bounds::nonnegative(n);
            bounds.upper.iter_mut().for_each(|x| *x = 1.0);
            bounds.fix(top, 1.0);
            let mut obj = RayleighObjective {
                kernel: &kernel,
                surrogate_r: None,
                buf: Vec::new(),
            };
            let rep = minimize(&mut obj, u, &bounds, &opts.lbfgs(1.0 / (hn * m)));
            converged_any |= rep.converged || rep.stalled;
            u = rep.x;
            consider(exact_log_quotient(&u), &u);
        } else {
            converged_any = true;
        }
    }
    if !converged_any {
        return Err(Error::NoConvergence(
            "no Rayleigh start reached the gradient tolerance".into(),
        ));
    }
    let (lq, u) = best.ok_or_else(|| Error::NoConvergence("all quotients were infinite".into()))?;
    Ok((lq.exp(), GridFunction::new(dom.clone(), u)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_domain, Shape};
    use crate::seminorm::{gagliardo, pairing};

    fn disk(h: f64) -> Arc<GridDomain> {
        Arc::new(build_domain(Shape::Disk { radius: 0.5 }, h, None).unwrap())
    }

    fn random_fn(d: &Arc<GridDomain>, seed: u64, lo: f64) -> GridFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..d.interior_count())
            .map(|_| rng.gen_range(lo..1.0))
            .collect();
        GridFunction::new(d.clone(), v).unwrap()
    }

    #[test]
    fn classify_cases() {
        assert_eq!(classify(0.5, 0.75, 10.0, 20.0).unwrap(), Case::H1b);
        assert_eq!(classify(0.75, 0.5, 12.0, 6.0).unwrap(), Case::H1a);
        // q below N/beta
        assert!(classify(0.75, 0.5, 12.0, 3.0).is_err());
        assert!(classify(0.5, 0.5, 12.0, 6.0).is_err());
        assert!(classify(0.5, 0.75, 20.0, 10.0).is_err());
    }

    #[test]
    fn zero_energy_at_zero() {
        let d = disk(1.0 / 8.0);
        let es = EnergySpec::new(0.75, 0.5, 12.0, 6.0, 100.0, 24.0, &d).unwrap();
        assert_eq!(
            energy_eval(&GridFunction::zeros(d.clone()), &es, false).unwrap(),
            0.0
        );
        assert!(matches!(
            energy_grad(&GridFunction::zeros(d), &es),
            Err(Error::ZeroFunction)
        ));
    }

    #[test]
    fn surrogate_and_exact_energies_differ_by_norm_term_only() {
        let d = disk(1.0 / 8.0);
        let es = EnergySpec::new(0.75, 0.5, 12.0, 6.0, 1e4, 48.0, &d).unwrap();
        let u = random_fn(&d, 3, 0.0);
        let e_r = energy_eval(&u, &es, true).unwrap();
        let e_inf = energy_eval(&u, &es, false).unwrap();
        let nr = log_lr_norm(u.values(), es.r, d.h).exp();
        let ninf = u.sup_norm();
        let bound = es.mu() / es.p * (nr.powf(es.p) - ninf.powf(es.p)).abs();
        assert!((e_r - e_inf).abs() <= bound * (1.0 + 1e-10));
    }

    #[test]
    fn gradient_dotted_with_u() {
        let d = disk(1.0 / 8.0);
        let es = EnergySpec::new(0.75, 0.5, 12.0, 6.0, 1e4, 24.0, &d).unwrap();
        let u = cone_function(&d, d.deepest[0]).unwrap();
        let g = energy_grad(&u, &es).unwrap();
        let lhs: f64 = g.values().iter().zip(u.values()).map(|(a, b)| a * b).sum();
        let nr = log_lr_norm(u.values(), es.r, d.h).exp();
        let lr_sum: f64 = u
            .values()
            .iter()
            .map(|v| v.abs().powf(es.r) * d.h * d.h)
            .sum();
        let rhs = pairing(&u, &u, &es.fp_alpha).unwrap() + pairing(&u, &u, &es.fp_beta).unwrap()
            - es.mu() * nr.powf(es.p - es.r) * lr_sum;
        assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs(), "{lhs} vs {rhs}");
    }

    #[test]
    fn gradient_is_symmetric_on_symmetric_data() {
        let d = disk(1.0 / 8.0);
        let es = EnergySpec::new(0.75, 0.5, 12.0, 6.0, 1e4, 24.0, &d).unwrap();
        let u = GridFunction::from_fn(d.clone(), |x, y| 0.3 - x * x - 0.5 * y * y).unwrap();
        let g = energy_grad(&u, &es).unwrap();
        for &k in d.interior_nodes() {
            let [x, y] = d.position(k);
            let mirror = d
                .interior_nodes()
                .iter()
                .copied()
                .find(|&j| d.position(j) == [-x, y])
                .unwrap();
            let (a, b) = (g.at_node(k), g.at_node(mirror));
            assert!((a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1e-300));
        }
    }

    #[test]
    fn argmax_ties_and_first() {
        let d = disk(1.0 / 4.0);
        let mut v = vec![0.1; d.interior_count()];
        v[2] = 1.0;
        v[5] = -1.0;
        let u = GridFunction::new(d.clone(), v).unwrap();
        let (gamma, first) = argmax_set(&u, DEFAULT_ARGMAX_TOL).unwrap();
        let nodes = d.interior_nodes();
        assert_eq!(gamma, vec![nodes[2], nodes[5]]);
        assert_eq!(first, nodes[2]);
        let (g2, f2) = argmax_set(&u.scaled(-4.0), DEFAULT_ARGMAX_TOL).unwrap();
        assert_eq!((g2, f2), (gamma, first));
        assert!(argmax_set(&GridFunction::zeros(d), 1e-6).is_err());
    }

    #[test]
    fn gateaux_check_along_u() {
        let d = disk(1.0 / 8.0);
        let u = random_fn(&d, 5, 0.1);
        let (lhs, rhs) = gateaux_supnorm_check(&u, &u, 6.0, 1e-7).unwrap();
        let np = u.sup_norm().powf(6.0);
        assert!((rhs - np).abs() <= 1e-12 * np);
        assert!((lhs - np).abs() <= 1e-5 * np);
    }

    #[test]
    fn gateaux_check_away_from_max() {
        let d = disk(1.0 / 8.0);
        let u = cone_function(&d, d.deepest[0]).unwrap();
        let v = GridFunction::from_fn(d.clone(), |x, _| if x > 0.3 { 1.0 } else { 0.0 }).unwrap();
        let (lhs, rhs) = gateaux_supnorm_check(&u, &v, 6.0, 1e-4).unwrap();
        assert_eq!(rhs, 0.0);
        assert_eq!(lhs, 0.0);
    }

    #[test]
    fn gateaux_check_converges() {
        let d = disk(1.0 / 8.0);
        let u = random_fn(&d, 21, -1.0);
        let v = random_fn(&d, 22, -1.0);
        let errs: Vec<f64> = [1e-3, 1e-4, 1e-5]
            .iter()
            .map(|&e| {
                let (l, r) = gateaux_supnorm_check(&u, &v, 6.0, e).unwrap();
                (l - r).abs()
            })
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    #[test]
    fn nehari_projection_lands_on_the_set() {
        let d = disk(1.0 / 8.0);
        let r = d.inradius;
        let lambda = 2.0 * r.powf(-0.75);
        let es = EnergySpec::new(0.75, 0.5, 12.0, 6.0, lambda.powf(12.0), 24.0, &d).unwrap();
        let u = cone_function(&d, d.deepest[0]).unwrap();
        let (t, tu) = nehari_project(&u, &es).unwrap();
        assert!(t > 0.0);
        let a = gagliardo(&tu, &es.fp_alpha).unwrap().powf(12.0);
        let b = gagliardo(&tu, &es.fp_beta).unwrap().powf(6.0);
        let c = es.mu() * tu.sup_norm().powf(12.0);
        assert!(((a + b - c) / c).abs() <= 1e-8);
        let e = energy_eval(&tu, &es, false).unwrap();
        let ident = (1.0 / 6.0 - 1.0 / 12.0) * b;
        assert!(((e - ident) / ident).abs() <= 1e-8);

        // projecting again is the identity
        let (t2, _) = nehari_project(&tu, &es).unwrap();
        assert!((t2 - 1.0).abs() < 1e-10);
        // scale invariance of the projected function
        let (tc, tcu) = nehari_project(&u.scaled(7.0), &es).unwrap();
        assert!((tc * 7.0 - t).abs() <= 1e-10 * t);
        for (x, y) in tcu.values().iter().zip(tu.values()) {
            assert!((x - y).abs() <= 1e-10 * tu.sup_norm());
        }
    }

    #[test]
    fn nehari_errors() {
        let d = disk(1.0 / 8.0);
        let h1b = EnergySpec::new(0.5, 0.75, 10.0, 20.0, 1e6, 40.0, &d).unwrap();
        let u = cone_function(&d, d.deepest[0]).unwrap();
        assert!(matches!(nehari_project(&u, &h1b), Err(Error::WrongCase(_))));
        let tiny_mu = EnergySpec::new(0.75, 0.5, 12.0, 6.0, 1e-6, 24.0, &d).unwrap();
        assert!(matches!(
            nehari_project(&u, &tiny_mu),
            Err(Error::NotProjectable)
        ));
    }

    #[test]
    fn rayleigh_is_below_cone_and_scale_free() {
        let d = disk(1.0 / 8.0);
        let fp = FracParams::for_domain(0.5, 8.0, &d).unwrap();
        let opts = SolverOpts {
            random_starts: 1,
            ..SolverOpts::default()
        };
        let (lambda, e) = rayleigh_min(&fp, &d, &opts).unwrap();
        let cone = cone_function(&d, d.deepest[0]).unwrap();
        let bound = gagliardo(&cone, &fp).unwrap() / d.inradius;
        assert!(lambda.powf(1.0 / fp.m) <= bound);
        assert!((e.sup_norm() - 1.0).abs() < 1e-15);
        let q = |v: &GridFunction| (gagliardo(v, &fp).unwrap() / v.sup_norm()).powf(fp.m);
        assert!((q(&e) - lambda).abs() <= 1e-10 * lambda);
        assert!((q(&e.scaled(7.0)) - lambda).abs() <= 1e-10 * lambda);
    }
}
