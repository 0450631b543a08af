//! The p -> infinity sweep with `q = Q p` and `mu_p = Lambda^p`, and the
//! closed-form limits it is compared against.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{DomainSpec, GridDomain, GridFunction, DIM};
use crate::energy::{classify, EnergySpec};
use crate::error::{Error, Result};
use crate::seminorm::holder_seminorm;
use crate::solver::{solve_least_energy, Init, SolverOpts};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Limit ratio `Q = q/p`.
    #[serde(rename = "Q")]
    pub q_ratio: f64,
    /// Limit `Lambda = mu_p^{1/p}`.
    #[serde(rename = "Lambda")]
    pub lambda: f64,
    pub p_schedule: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub domain: DomainSpec,
    /// Surrogate exponent of the reported energies, as a multiple of `max(p, q)`.
    #[serde(default = "default_r_multiplier")]
    pub r_multiplier: f64,
    #[serde(default)]
    pub solver: SolverOpts,
}

fn default_r_multiplier() -> f64 {
    2.0
}

impl SweepConfig {
    /// Checks everything that does not need the grid.
    pub fn validate(&self) -> Result<()> {
        let q = self.q_ratio;
        if q == 1.0 {
            return Err(Error::QEqualsOne);
        }
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::InvalidParams(format!("Q must be positive, got {q}")));
        }
        let (a, b) = (self.alpha, self.beta);
        if q < 1.0 && !(0.0 < b && b < a && a < 1.0) {
            return Err(Error::InvalidParams(format!(
                "Q < 1 needs 0 < beta < alpha < 1, got alpha = {a}, beta = {b}"
            )));
        }
        if q > 1.0 && !(0.0 < a && a < b && b < 1.0) {
            return Err(Error::InvalidParams(format!(
                "Q > 1 needs 0 < alpha < beta < 1, got alpha = {a}, beta = {b}"
            )));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "Lambda must be positive, got {}",
                self.lambda
            )));
        }
        if self.p_schedule.is_empty() {
            return Err(Error::InvalidParams("p_schedule is empty".into()));
        }
        if self.p_schedule.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParams(
                "p_schedule must be strictly increasing".into(),
            ));
        }
        let floor = DIM as f64 / a.min(b);
        for &p in &self.p_schedule {
            if !(p > floor) {
                return Err(Error::InvalidParams(format!(
                    "every p must exceed N/min(alpha, beta) = {floor}, got {p}"
                )));
            }
            classify(a, b, p, q * p)?;
        }
        if !(self.r_multiplier >= 1.0 && self.r_multiplier.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "r_multiplier must be at least 1, got {}",
                self.r_multiplier
            )));
        }
        self.solver.validate()
    }

    /// Checks `Lambda R^alpha > 1` against the grid inradius.
    pub fn validate_for(&self, dom: &GridDomain) -> Result<()> {
        if !(self.lambda * dom.inradius.powf(self.alpha) > 1.0) {
            return Err(Error::LambdaTooSmall(self.lambda));
        }
        Ok(())
    }

    /// Problem data at one exponent of the schedule.
    pub fn energy_spec(&self, p: f64, dom: &GridDomain) -> Result<EnergySpec> {
        let q = self.q_ratio * p;
        EnergySpec::with_log_mu(
            self.alpha,
            self.beta,
            p,
            q,
            p * self.lambda.ln(),
            self.r_multiplier * p.max(q),
            dom,
        )
    }
}

/// Closed-form limits of the sweep quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitPrediction {
    pub inradius: f64,
    /// `R^beta (Lambda R^beta)^{1/(Q-1)}`
    pub sup_limit: f64,
    /// `(Lambda R^beta)^{1/(Q-1)}`
    pub beta_semi_limit: f64,
    /// `(Lambda R^alpha)^{-1} (Lambda R^beta)^{Q/(Q-1)}`
    pub alpha_semi_lower: f64,
    /// `(Lambda R^beta)^{Q/(Q-1)}`
    pub alpha_semi_upper: f64,
    pub depth_limit: f64,
    /// `R^{-beta}`
    pub holder_quotient: f64,
}

pub fn predict_limits(cfg: &SweepConfig, inradius: f64) -> Result<LimitPrediction> {
    let q = cfg.q_ratio;
    if q == 1.0 {
        return Err(Error::QEqualsOne);
    }
    if !(inradius > 0.0) {
        return Err(Error::InvalidParams(format!(
            "inradius must be positive, got {inradius}"
        )));
    }
    let r = inradius;
    let lb = cfg.lambda * r.powf(cfg.beta);
    let beta_semi_limit = lb.powf(1.0 / (q - 1.0));
    let alpha_semi_upper = lb.powf(q / (q - 1.0));
    Ok(LimitPrediction {
        inradius: r,
        sup_limit: r.powf(cfg.beta) * beta_semi_limit,
        beta_semi_limit,
        alpha_semi_lower: alpha_semi_upper / (cfg.lambda * r.powf(cfg.alpha)),
        alpha_semi_upper,
        depth_limit: r,
        holder_quotient: r.powf(-cfg.beta),
    })
}

/// One solved exponent of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: f64,
    pub q: f64,
    pub mu_log: f64,
    pub sup_norm: f64,
    pub semi_beta: f64,
    pub semi_alpha: f64,
    pub x_p: [f64; 2],
    pub depth: f64,
    /// `|u|_beta / |u|_inf`
    pub holder_q: f64,
    pub err_sup: f64,
    pub err_beta: f64,
    pub iters: usize,
    pub stationarity: f64,
    pub nehari_residual: f64,
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub config: SweepConfig,
    pub domain: Arc<GridDomain>,
    pub prediction: LimitPrediction,
    pub rows: Vec<SweepRow>,
    /// Solutions in schedule order.
    pub solutions: Vec<GridFunction>,
    /// Maximum node of each solution.
    pub max_nodes: Vec<usize>,
}

/// Solves along the schedule, warm-starting each exponent from the previous one.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepTable> {
    cfg.validate()?;
    let dom = Arc::new(cfg.domain.build()?);
    cfg.validate_for(&dom)?;
    run_sweep_on(cfg, dom)
}

/// [`run_sweep`] on a prebuilt domain.
pub fn run_sweep_on(cfg: &SweepConfig, dom: Arc<GridDomain>) -> Result<SweepTable> {
    cfg.validate()?;
    cfg.validate_for(&dom)?;
    let prediction = predict_limits(cfg, dom.inradius)?;
    let specs = cfg
        .p_schedule
        .iter()
        .map(|&p| cfg.energy_spec(p, &dom))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut solutions = Vec::new();
    let mut max_nodes = Vec::new();
    let mut opts = cfg.solver.clone();
    for es in specs {
        let s = solve_least_energy(&es, &dom, &opts)?;
        let holder = holder_seminorm(&s.u, cfg.beta)?.value;
        rows.push(SweepRow {
            p: es.p,
            q: es.q,
            mu_log: es.log_mu,
            sup_norm: s.sup_norm,
            semi_beta: s.semi_beta,
            semi_alpha: s.semi_alpha,
            x_p: dom.position(s.x_u),
            depth: dom.distance[s.x_u],
            holder_q: holder / s.sup_norm,
            err_sup: relative_error(s.sup_norm, prediction.sup_limit),
            err_beta: relative_error(s.semi_beta, prediction.beta_semi_limit),
            iters: s.iterations,
            stationarity: s.stationarity,
            nehari_residual: s.nehari_residual,
            energy: s.energy,
        });
        opts.init = Init::Warm(s.u.values().to_vec());
        max_nodes.push(s.x_u);
        solutions.push(s.u);
    }
    Ok(SweepTable {
        config: cfg.clone(),
        domain: dom,
        prediction,
        rows,
        solutions,
        max_nodes,
    })
}

pub fn relative_error(value: f64, target: f64) -> f64 {
    (value - target).abs() / target.abs()
}

/// Increases of `seq` from its second entry on, as `(count, largest)` in
/// absolute terms. A nonincreasing sequence gives `(0, 0.0)`.
pub fn trend_inversions(seq: &[f64]) -> (usize, f64) {
    let rises: Vec<f64> = seq
        .windows(2)
        .skip(1)
        .map(|w| w[1] - w[0])
        .filter(|&d| d > 0.0)
        .collect();
    (rises.len(), rises.iter().copied().fold(0.0, f64::max))
}

/// `max_i u_i / (beta_semi_limit d(x_i)^beta)` over interior nodes.
pub fn distance_bound_check(u: &GridFunction, pred: &LimitPrediction, beta: f64) -> f64 {
    let dom = u.domain();
    u.values()
        .iter()
        .zip(dom.interior_nodes())
        .map(|(&v, &k)| v / (pred.beta_semi_limit * dom.distance[k].powf(beta)))
        .fold(0.0, f64::max)
}
