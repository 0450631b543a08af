//! Box-projected limited-memory BFGS with backtracking line search.

use std::collections::VecDeque;

/// A smooth objective. `eval` returns the value and writes the gradient;
/// infeasible points return `f64::INFINITY`.
pub trait Objective {
    fn eval(&mut self, x: &[f64], grad: &mut [f64]) -> f64;
}

#[derive(Debug, Clone)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn nonnegative(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    /// Freezes coordinate `i` at `value`.
    pub fn fix(&mut self, i: usize, value: f64) {
        self.lower[i] = value;
        self.upper[i] = value;
    }

    fn project(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.max(*lo).min(*hi);
        }
    }

    /// Gradient with components that point out of the box zeroed.
    fn projected_gradient(&self, x: &[f64], g: &[f64], out: &mut [f64]) {
        for i in 0..x.len() {
            let at_lo = x[i] <= self.lower[i];
            let at_hi = x[i] >= self.upper[i];
            out[i] = if (at_lo && g[i] > 0.0) || (at_hi && g[i] < 0.0) || (at_lo && at_hi) {
                0.0
            } else {
                g[i]
            };
        }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsSettings {
    pub max_iters: usize,
    /// Stop once `grad_scale * max|projected gradient| <= grad_tol`.
    pub grad_tol: f64,
    pub grad_scale: f64,
    pub memory: usize,
    /// Backtracking shrink factor in (0,1).
    pub shrink: f64,
    /// Sufficient decrease constant in (0,1).
    pub armijo: f64,
    /// Largest first-iteration move relative to `max|x|`.
    pub initial_move: f64,
}

impl Default for LbfgsSettings {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            grad_tol: 1e-6,
            grad_scale: 1.0,
            memory: 10,
            shrink: 0.5,
            armijo: 1e-4,
            initial_move: 0.01,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsReport {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// The line search could not decrease the objective any further.
    pub stalled: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn typical_size(x: &[f64]) -> f64 {
    let m = max_abs(x);
    if m > 0.0 {
        m
    } else {
        1.0
    }
}

/// Minimizes `obj` over the box starting from `x0` (projected first).
pub fn minimize<O: Objective>(
    obj: &mut O,
    x0: Vec<f64>,
    bounds: &Bounds,
    cfg: &LbfgsSettings,
) -> LbfgsReport {
    let n = x0.len();
    let mut x = x0;
    bounds.project(&mut x);
    let mut g = vec![0.0; n];
    let mut f = obj.eval(&x, &mut g);
    let mut evaluations = 1;
    let mut pg = vec![0.0; n];
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(cfg.memory);
    let mut dir = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut g_trial = vec![0.0; n];
    let mut alpha_buf = vec![0.0; cfg.memory];
    let mut stalled = false;
    let mut flat_steps = 0;
    let mut iterations = 0;

    bounds.projected_gradient(&x, &g, &mut pg);
    let mut gnorm = cfg.grad_scale * max_abs(&pg);
    while iterations < cfg.max_iters && gnorm > cfg.grad_tol && f.is_finite() {
        // two-loop recursion on the projected gradient
        dir.copy_from_slice(&pg);
        for (k, (s, y, rho)) in memory.iter().enumerate().rev() {
            let a = rho * dot(s, &dir);
            alpha_buf[k] = a;
            for (d, yv) in dir.iter_mut().zip(y) {
                *d -= a * yv;
            }
        }
        let gamma = memory
            .back()
            .map(|(s, y, _)| dot(s, y) / dot(y, y))
            .unwrap_or_else(|| cfg.initial_move * typical_size(&x) / max_abs(&pg));
        for d in dir.iter_mut() {
            *d *= gamma;
        }
        for (k, (s, y, rho)) in memory.iter().enumerate() {
            let b = rho * dot(y, &dir);
            for (d, sv) in dir.iter_mut().zip(s) {
                *d += (alpha_buf[k] - b) * sv;
            }
        }
        for i in 0..n {
            dir[i] = if pg[i] == 0.0 { 0.0 } else { -dir[i] };
        }
        if dot(&dir, &pg) >= 0.0 {
            memory.clear();
            let scale = cfg.initial_move * typical_size(&x) / max_abs(&pg);
            for i in 0..n {
                dir[i] = -scale * pg[i];
            }
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            for i in 0..n {
                trial[i] = x[i] + step * dir[i];
            }
            bounds.project(&mut trial);
            let f_trial = obj.eval(&trial, &mut g_trial);
            evaluations += 1;
            let predicted: f64 = (0..n).map(|i| g[i] * (trial[i] - x[i])).sum();
            if f_trial.is_finite() && f_trial <= f + cfg.armijo * predicted && f_trial <= f {
                accepted = Some(f_trial);
                break;
            }
            step *= cfg.shrink;
        }
        let Some(f_new) = accepted else {
            if memory.is_empty() {
                stalled = true;
                break;
            }
            memory.clear();
            continue;
        };
        let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_trial.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if memory.len() == cfg.memory {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        let improvement = f - f_new;
        f = f_new;
        x.copy_from_slice(&trial);
        g.copy_from_slice(&g_trial);
        iterations += 1;
        bounds.projected_gradient(&x, &g, &mut pg);
        gnorm = cfg.grad_scale * max_abs(&pg);
        if improvement <= 4.0 * f64::EPSILON * f.abs().max(1e-300) {
            flat_steps += 1;
            if flat_steps >= 5 {
                stalled = true;
                break;
            }
        } else {
            flat_steps = 0;
        }
    }
    LbfgsReport {
        x,
        value: f,
        grad_norm: gnorm,
        iterations,
        evaluations,
        converged: gnorm <= cfg.grad_tol,
        stalled,
    }
}
