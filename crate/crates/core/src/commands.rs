//! The five experiment commands. Each validates its whole configuration,
//! computes, and writes its result files into the output directory.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use crate::asymptotics::{run_sweep_on, LimitPrediction, SweepConfig, SweepRow};
use crate::config::{missing, Command, RunConfig};
use crate::domain::{write_mask_file, DomainSpec, GridDomain};
use crate::energy::{rayleigh_min, Case, EnergySpec};
use crate::error::Result;
use crate::io::{domain_csv, fmt_f64, function_csv, read_function_csv, to_json, write_file};
use crate::seminorm::FracParams;
use crate::solver::{solve_least_energy, SolveResult, SolverOpts};
use crate::viscosity::{default_exclude_radius, limit_residual, ViscosityReport};

/// Files written by a command and a short human-readable summary.
#[derive(Debug, Clone, Default)]
pub struct Outputs {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

impl Outputs {
    fn write(&mut self, path: PathBuf, contents: &str) -> Result<()> {
        write_file(&path, contents)?;
        self.files.push(path);
        Ok(())
    }
}

/// A validated command, ready to run.
enum Plan {
    Domain(Arc<GridDomain>),
    Eigen {
        dom: Arc<GridDomain>,
        params: Vec<FracParams>,
        opts: SolverOpts,
    },
    Solve {
        dom: Arc<GridDomain>,
        spec: DomainSpec,
        es: EnergySpec,
        opts: SolverOpts,
    },
    Sweep {
        dom: Arc<GridDomain>,
        cfg: SweepConfig,
    },
    Viscosity {
        dom: Arc<GridDomain>,
        solution: PathBuf,
        q_ratio: f64,
        alpha: f64,
        beta: f64,
        exclude_radius: f64,
    },
}

fn prepare(cmd: Command, cfg: &RunConfig) -> Result<Plan> {
    match cmd {
        Command::Domain => Ok(Plan::Domain(Arc::new(cfg.domain_spec()?.build()?))),
        Command::Eigen => {
            let block = cfg.eigen.as_ref().ok_or_else(|| missing("eigen"))?;
            let dom = Arc::new(cfg.domain_spec()?.build()?);
            if block.m.is_empty() {
                return Err(crate::Error::InvalidParams("eigen.m is empty".into()));
            }
            let params = block
                .m
                .iter()
                .map(|&m| {
                    let fp = FracParams::for_domain(block.s, m, &dom)?;
                    fp.validate_for(&dom)?;
                    Ok(fp)
                })
                .collect::<Result<Vec<_>>>()?;
            let opts = cfg.solver_opts();
            opts.validate()?;
            Ok(Plan::Eigen { dom, params, opts })
        }
        Command::Solve => {
            let block = cfg.energy.as_ref().ok_or_else(|| missing("energy"))?;
            let spec = cfg.domain_spec()?.clone();
            let dom = Arc::new(spec.build()?);
            let es = block.spec(&dom)?;
            let opts = cfg.solver_opts();
            opts.validate()?;
            Ok(Plan::Solve {
                dom,
                spec,
                es,
                opts,
            })
        }
        Command::Sweep => {
            let mut sweep = cfg.sweep.clone().ok_or_else(|| missing("sweep"))?;
            if let Some(seed) = cfg.seed {
                sweep.solver.seed = seed;
            }
            sweep.validate()?;
            let dom = Arc::new(sweep.domain.build()?);
            sweep.validate_for(&dom)?;
            for &p in &sweep.p_schedule {
                sweep.energy_spec(p, &dom)?;
            }
            Ok(Plan::Sweep { dom, cfg: sweep })
        }
        Command::Viscosity => {
            let block = cfg.viscosity.as_ref().ok_or_else(|| missing("viscosity"))?;
            let dom = Arc::new(cfg.domain_spec()?.build()?);
            let exclude_radius = block
                .exclude_radius
                .unwrap_or_else(|| default_exclude_radius(&dom));
            let checks = [
                (
                    block.q_ratio > 0.0 && block.q_ratio.is_finite(),
                    "Q must be positive",
                ),
                (
                    block.alpha > 0.0 && block.alpha < 1.0,
                    "alpha must lie in (0,1)",
                ),
                (
                    block.beta > 0.0 && block.beta < 1.0,
                    "beta must lie in (0,1)",
                ),
                (exclude_radius >= 0.0, "exclude_radius must be nonnegative"),
            ];
            if let Some((_, msg)) = checks.iter().find(|(ok, _)| !ok) {
                return Err(crate::Error::InvalidParams((*msg).into()));
            }
            if !block.solution.is_file() {
                return Err(crate::Error::Io {
                    path: block.solution.clone(),
                    source: std::io::Error::new(
                        std::io::ErrorKind::NotFound,
                        "solution file not found",
                    ),
                });
            }
            Ok(Plan::Viscosity {
                dom,
                solution: block.solution.clone(),
                q_ratio: block.q_ratio,
                alpha: block.alpha,
                beta: block.beta,
                exclude_radius,
            })
        }
    }
}

/// Validates `cfg` for `cmd`, then runs it and writes into `out`.
pub fn run(cmd: Command, cfg: &RunConfig, out: &Path) -> Result<Outputs> {
    match prepare(cmd, cfg)? {
        Plan::Domain(dom) => cmd_domain(&dom, out),
        Plan::Eigen { dom, params, opts } => cmd_eigen(&dom, &params, &opts, out),
        Plan::Solve {
            dom,
            spec,
            es,
            opts,
        } => cmd_solve(&dom, &spec, &es, &opts, out),
        Plan::Sweep { dom, cfg } => cmd_sweep(dom, &cfg, out),
        Plan::Viscosity {
            dom,
            solution,
            q_ratio,
            alpha,
            beta,
            exclude_radius,
        } => cmd_viscosity(&dom, &solution, q_ratio, alpha, beta, exclude_radius, out),
    }
}

#[derive(Serialize)]
struct NodeRecord {
    node: usize,
    x: f64,
    y: f64,
}

fn node_record(dom: &GridDomain, node: usize) -> NodeRecord {
    let [x, y] = dom.position(node);
    NodeRecord { node, x, y }
}

#[derive(Serialize)]
struct GridRecord {
    h: f64,
    inradius: f64,
    extent: [usize; 2],
    lattice_origin: [i64; 2],
    collar_width: usize,
    interior_count: usize,
    deepest: Vec<NodeRecord>,
}

fn grid_record(dom: &GridDomain) -> GridRecord {
    GridRecord {
        h: dom.h,
        inradius: dom.inradius,
        extent: dom.extent,
        lattice_origin: dom.lattice_origin,
        collar_width: dom.collar_width,
        interior_count: dom.interior_count(),
        deepest: dom.deepest.iter().map(|&k| node_record(dom, k)).collect(),
    }
}

pub fn cmd_domain(dom: &GridDomain, out: &Path) -> Result<Outputs> {
    let mut o = Outputs::default();
    o.write(out.join("domain.csv"), &domain_csv(dom))?;
    o.write(out.join("domain.json"), &to_json(&grid_record(dom))?)?;
    let mask = out.join("mask.txt");
    write_mask_file(dom, &mask)?;
    o.files.push(mask);
    let mut summary = format!("R={}\n", fmt_f64(dom.inradius));
    for &k in &dom.deepest {
        let [x, y] = dom.position(k);
        summary += &format!("deepest node {k} at ({}, {})\n", fmt_f64(x), fmt_f64(y));
    }
    o.summary = summary;
    Ok(o)
}

#[derive(Serialize)]
struct EigenRow {
    m: f64,
    lambda: f64,
    lambda_root: f64,
    rel_error: f64,
}

#[derive(Serialize)]
struct EigenRecord {
    s: f64,
    inradius: f64,
    r_pow_minus_s: f64,
    seed: u64,
    rows: Vec<EigenRow>,
    grid: GridRecord,
}

pub const EIGEN_HEADER: &str = "m,lambda_root,r_pow_minus_s";

pub fn cmd_eigen(
    dom: &Arc<GridDomain>,
    params: &[FracParams],
    opts: &SolverOpts,
    out: &Path,
) -> Result<Outputs> {
    let s = params[0].s;
    let target = dom.inradius.powf(-s);
    let mut csv = format!("{EIGEN_HEADER}\n");
    let mut rows = Vec::new();
    for fp in params {
        let (lambda, _) = rayleigh_min(fp, dom, opts)?;
        let root = lambda.powf(1.0 / fp.m);
        csv += &format!("{},{},{}\n", fmt_f64(fp.m), fmt_f64(root), fmt_f64(target));
        rows.push(EigenRow {
            m: fp.m,
            lambda,
            lambda_root: root,
            rel_error: (root - target).abs() / target,
        });
    }
    let mut o = Outputs::default();
    o.write(out.join("eigen.csv"), &csv)?;
    let rec = EigenRecord {
        s,
        inradius: dom.inradius,
        r_pow_minus_s: target,
        seed: opts.seed,
        rows,
        grid: grid_record(dom),
    };
    o.write(out.join("eigen.json"), &to_json(&rec)?)?;
    o.summary = format!("R^(-s)={}\n", fmt_f64(target));
    for r in &rec.rows {
        o.summary += &format!("m={} lambda^(1/m)={}\n", r.m, fmt_f64(r.lambda_root));
    }
    Ok(o)
}

#[derive(Serialize)]
struct SolveRecord<'a> {
    case: Case,
    alpha: f64,
    beta: f64,
    p: f64,
    q: f64,
    log_mu: f64,
    domain: &'a DomainSpec,
    x_u: NodeRecord,
    argmax: Vec<usize>,
    sup_norm: f64,
    semi_alpha: f64,
    semi_beta: f64,
    energy: f64,
    nehari_residual: f64,
    stationarity: f64,
    iterations: usize,
    r_final: f64,
    stage_energies: &'a [f64],
    grad_norm: f64,
    seed: u64,
}

fn solve_record<'a>(
    s: &'a SolveResult,
    es: &EnergySpec,
    spec: &'a DomainSpec,
    dom: &GridDomain,
    seed: u64,
) -> SolveRecord<'a> {
    SolveRecord {
        case: es.case,
        alpha: es.alpha,
        beta: es.beta,
        p: es.p,
        q: es.q,
        log_mu: es.log_mu,
        domain: spec,
        x_u: node_record(dom, s.x_u),
        argmax: s.argmax.clone(),
        sup_norm: s.sup_norm,
        semi_alpha: s.semi_alpha,
        semi_beta: s.semi_beta,
        energy: s.energy,
        nehari_residual: s.nehari_residual,
        stationarity: s.stationarity,
        iterations: s.iterations,
        r_final: s.r_final,
        stage_energies: &s.stage_energies,
        grad_norm: s.grad_norm,
        seed,
    }
}

pub fn cmd_solve(
    dom: &Arc<GridDomain>,
    spec: &DomainSpec,
    es: &EnergySpec,
    opts: &SolverOpts,
    out: &Path,
) -> Result<Outputs> {
    let s = solve_least_energy(es, dom, opts)?;
    let mut o = Outputs::default();
    o.write(
        out.join("solve.json"),
        &to_json(&solve_record(&s, es, spec, dom, opts.seed))?,
    )?;
    o.write(out.join("u.csv"), &function_csv(&s.u))?;
    o.summary = format!(
        "sup_norm={} energy={} nehari_residual={}\n",
        fmt_f64(s.sup_norm),
        fmt_f64(s.energy),
        fmt_f64(s.nehari_residual)
    );
    Ok(o)
}

pub const SWEEP_HEADER: &str =
    "p,q,mu_log,sup_norm,semi_beta,semi_alpha,x_p_x,x_p_y,depth,holder_q,err_sup,err_beta,iters,stationarity";

/// The sweep table as CSV.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut csv = format!("{SWEEP_HEADER}\n");
    for r in rows {
        let floats = [
            r.p,
            r.q,
            r.mu_log,
            r.sup_norm,
            r.semi_beta,
            r.semi_alpha,
            r.x_p[0],
            r.x_p[1],
            r.depth,
            r.holder_q,
            r.err_sup,
            r.err_beta,
        ];
        let mut line: Vec<String> = floats.iter().map(|&x| fmt_f64(x)).collect();
        line.push(r.iters.to_string());
        line.push(fmt_f64(r.stationarity));
        csv += &line.join(",");
        csv.push('\n');
    }
    csv
}

#[derive(Serialize)]
struct SweepRecord<'a> {
    config: &'a SweepConfig,
    predictions: &'a LimitPrediction,
    grid: GridRecord,
    rows: &'a [SweepRow],
    solutions: Vec<String>,
}

/// File name of the solution at exponent `p`.
pub fn solution_file_name(p: f64) -> String {
    format!("u_p{}.csv", p.to_string().replace('.', "_"))
}

pub fn cmd_sweep(dom: Arc<GridDomain>, cfg: &SweepConfig, out: &Path) -> Result<Outputs> {
    let table = run_sweep_on(cfg, dom)?;
    let mut o = Outputs::default();
    o.write(out.join("sweep.csv"), &sweep_csv(&table.rows))?;
    let mut names = Vec::new();
    for (row, u) in table.rows.iter().zip(&table.solutions) {
        let name = solution_file_name(row.p);
        o.write(out.join(&name), &function_csv(u))?;
        names.push(name);
    }
    o.write(out.join("domain.csv"), &domain_csv(&table.domain))?;
    let rec = SweepRecord {
        config: cfg,
        predictions: &table.prediction,
        grid: grid_record(&table.domain),
        rows: &table.rows,
        solutions: names,
    };
    o.write(out.join("predictions.json"), &to_json(&rec)?)?;
    o.summary = format!(
        "sup_limit={} beta_semi_limit={}\n",
        fmt_f64(table.prediction.sup_limit),
        fmt_f64(table.prediction.beta_semi_limit)
    );
    for r in &table.rows {
        o.summary += &format!(
            "p={} sup_norm={} err_sup={} err_beta={}\n",
            r.p,
            fmt_f64(r.sup_norm),
            fmt_f64(r.err_sup),
            fmt_f64(r.err_beta)
        );
    }
    Ok(o)
}

pub const VISCOSITY_HEADER: &str =
    "node_index,x,y,la_plus,la_minus,lb_plus,lb_minus,residual,excluded,flagged";

pub fn viscosity_csv(dom: &GridDomain, rep: &ViscosityReport) -> String {
    let mut csv = format!("{VISCOSITY_HEADER}\n");
    for n in &rep.nodes {
        let [x, y] = dom.position(n.node);
        let res = n.residual.map(fmt_f64).unwrap_or_default();
        csv += &format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            n.node,
            fmt_f64(x),
            fmt_f64(y),
            fmt_f64(n.la_plus),
            fmt_f64(n.la_minus),
            fmt_f64(n.lb_plus),
            fmt_f64(n.lb_minus),
            res,
            u8::from(n.excluded),
            u8::from(n.flagged)
        );
    }
    csv
}

#[derive(Serialize)]
struct ViscositySummary<'a> {
    solution: &'a Path,
    #[serde(rename = "Q")]
    q_ratio: f64,
    alpha: f64,
    beta: f64,
    x_u: NodeRecord,
    exclude_radius: f64,
    excluded: &'a [usize],
    flagged: &'a [usize],
    checked: usize,
    median_abs: f64,
    max_abs: f64,
}

pub fn cmd_viscosity(
    dom: &Arc<GridDomain>,
    solution: &Path,
    q_ratio: f64,
    alpha: f64,
    beta: f64,
    exclude_radius: f64,
    out: &Path,
) -> Result<Outputs> {
    let u = read_function_csv(dom, solution)?;
    let rep = limit_residual(&u, q_ratio, alpha, beta, exclude_radius)?;
    let mut o = Outputs::default();
    o.write(out.join("viscosity.csv"), &viscosity_csv(dom, &rep))?;
    let summary = ViscositySummary {
        solution,
        q_ratio,
        alpha,
        beta,
        x_u: node_record(dom, rep.x_u),
        exclude_radius,
        excluded: &rep.excluded,
        flagged: &rep.flagged,
        checked: rep.checked,
        median_abs: rep.median_abs,
        max_abs: rep.max_abs,
    };
    o.write(out.join("viscosity.json"), &to_json(&summary)?)?;
    o.summary = format!(
        "median |res|={} max |res|={} excluded={}\n",
        fmt_f64(rep.median_abs),
        fmt_f64(rep.max_abs),
        rep.excluded.len()
    );
    Ok(o)
}
