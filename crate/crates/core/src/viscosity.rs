//! Residual of the limit equation
//! `max{L_alpha^+ u, (L_beta^+ u)^Q} = max{-L_alpha^- u, (-L_beta^- u)^Q}`
//! and the finite-m approximations of the slope operators.

use serde::{Deserialize, Serialize};

use crate::domain::{GridDomain, GridFunction};
use crate::energy::{argmax_set, DEFAULT_ARGMAX_TOL};
use crate::error::{Error, Result};
use crate::seminorm::{slopes_all, upper_lower_slope, FracParams, SeminormKernel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViscosityNode {
    pub node: usize,
    pub la_plus: f64,
    pub la_minus: f64,
    pub lb_plus: f64,
    pub lb_minus: f64,
    /// `None` on excluded nodes.
    pub residual: Option<f64>,
    pub excluded: bool,
    /// Excluded because a `beta` slope had the wrong sign.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViscosityReport {
    pub x_u: usize,
    pub exclude_radius: f64,
    pub nodes: Vec<ViscosityNode>,
    /// Excluded nodes in index order (the argmax neighborhood plus flagged nodes).
    pub excluded: Vec<usize>,
    pub flagged: Vec<usize>,
    pub median_abs: f64,
    pub max_abs: f64,
    pub checked: usize,
}

/// Default radius of the excluded neighborhood of the argmax set.
pub fn default_exclude_radius(dom: &GridDomain) -> f64 {
    3.0 * dom.h
}

pub fn limit_residual(
    u: &GridFunction,
    q_ratio: f64,
    alpha: f64,
    beta: f64,
    exclude_radius: f64,
) -> Result<ViscosityReport> {
    if u.values().iter().all(|&v| v <= 0.0) {
        return Err(Error::DegenerateInput("u has no positive value"));
    }
    let dom = u.domain();
    let (gamma, x_u) = argmax_set(u, DEFAULT_ARGMAX_TOL)?;
    let near = dom.nodes_within(&gamma, exclude_radius);
    let sa = slopes_all(u, alpha);
    let sb = slopes_all(u, beta);
    let mut nodes = Vec::with_capacity(sa.len());
    let mut abs_res = Vec::new();
    for (slot, &k) in dom.interior_nodes().iter().enumerate() {
        let (la_plus, la_minus) = sa[slot];
        let (lb_plus, lb_minus) = sb[slot];
        let in_near = near.binary_search(&k).is_ok();
        let flagged = !in_near && !(lb_plus > 0.0 && -lb_minus > 0.0);
        let residual = if in_near || flagged {
            None
        } else {
            let lhs = la_plus.max(lb_plus.powf(q_ratio));
            let rhs = (-la_minus).max((-lb_minus).powf(q_ratio));
            abs_res.push((lhs - rhs).abs());
            Some(lhs - rhs)
        };
        nodes.push(ViscosityNode {
            node: k,
            la_plus,
            la_minus,
            lb_plus,
            lb_minus,
            residual,
            excluded: in_near || flagged,
            flagged,
        });
    }
    let excluded = nodes
        .iter()
        .filter(|n| n.excluded)
        .map(|n| n.node)
        .collect();
    let flagged = nodes.iter().filter(|n| n.flagged).map(|n| n.node).collect();
    abs_res.sort_by(f64::total_cmp);
    Ok(ViscosityReport {
        x_u,
        exclude_radius,
        nodes,
        excluded,
        flagged,
        median_abs: median(&abs_res),
        max_abs: abs_res.last().copied().unwrap_or(0.0),
        checked: abs_res.len(),
    })
}

fn median(sorted: &[f64]) -> f64 {
    match sorted.len() {
        0 => 0.0,
        n if n % 2 == 1 => sorted[n / 2],
        n => 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]),
    }
}

/// Finite-m slope approximations at one node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeRow {
    pub m: f64,
    /// `(2 sum_{u_j > u_i} |u_j - u_i|^{m-1} |x_j - x_i|^{-N-sm} h^N)^{1/(m-1)}`
    pub a_m: f64,
    /// Same over `u_j < u_i`.
    pub b_m: f64,
    pub l_plus: f64,
    pub l_minus: f64,
    /// `a_m - L^+`
    pub err_a: f64,
    /// `b_m + L^-`
    pub err_b: f64,
}

/// `A_m` and `B_m` at `node` for each `(m, u)` of the family, next to the
/// slopes `L_s^+ u`, `L_s^- u` they approximate.
pub fn slope_limit_check(
    family: &[(f64, GridFunction)],
    s: f64,
    node: usize,
) -> Result<Vec<SlopeRow>> {
    family
        .iter()
        .map(|(m, u)| {
            let dom = u.domain();
            let slot = dom.interior_slot(node).ok_or(Error::NotInterior(node))?;
            let fp = FracParams::for_domain(s, *m, dom)?;
            let kernel = SeminormKernel::new(dom, fp)?;
            let (pos, neg) = kernel.pointwise_log_parts(u.values(), slot);
            let a_m = (pos / (m - 1.0)).exp();
            let b_m = (neg / (m - 1.0)).exp();
            let (l_plus, l_minus) = upper_lower_slope(u, node, s)?;
            Ok(SlopeRow {
                m: *m,
                a_m,
                b_m,
                l_plus,
                l_minus,
                err_a: a_m - l_plus,
                err_b: b_m + l_minus,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::domain::{build_domain, cone_function, Shape};

    fn disk(h: f64) -> Arc<GridDomain> {
        Arc::new(build_domain(Shape::Disk { radius: 0.5 }, h, None).unwrap())
    }

    #[test]
    fn zero_is_degenerate() {
        let d = disk(1.0 / 8.0);
        let z = GridFunction::zeros(d.clone());
        assert!(matches!(
            limit_residual(&z, 0.5, 0.75, 0.5, 0.3),
            Err(Error::DegenerateInput(_))
        ));
        let neg = cone_function(&d, d.deepest[0]).unwrap().scaled(-1.0);
        assert!(limit_residual(&neg, 0.5, 0.75, 0.5, 0.3).is_err());
    }

    #[test]
    fn cone_has_positive_witnesses() {
        let d = disk(1.0 / 16.0);
        let cone = cone_function(&d, d.deepest[0]).unwrap();
        let rep = limit_residual(&cone, 0.5, 0.75, 0.5, default_exclude_radius(&d)).unwrap();
        assert!(rep.flagged.is_empty());
        assert!(rep.excluded.contains(&d.deepest[0]));
        for n in &rep.nodes {
            assert!(n.la_plus >= n.la_minus && n.lb_plus >= n.lb_minus);
            if n.node != d.deepest[0] {
                assert!(n.lb_plus > 0.0 && n.lb_minus < 0.0);
            }
        }
        assert_eq!(rep.checked + rep.excluded.len(), d.interior_count());
    }

    #[test]
    fn odd_symmetry_of_slopes() {
        let d = disk(1.0 / 8.0);
        let u = GridFunction::from_fn(d.clone(), |x, y| (3.0 * x).sin() + y * y).unwrap();
        let a = slopes_all(&u, 0.5);
        let b = slopes_all(&u.scaled(-1.0), 0.5);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.0, -y.1);
            assert_eq!(x.1, -y.0);
        }
    }

    #[test]
    fn cone_center_lower_slope_limit() {
        let d = disk(1.0 / 16.0);
        let cone = cone_function(&d, d.deepest[0]).unwrap();
        let fam: Vec<(f64, GridFunction)> = [20.0, 40.0, 60.0]
            .iter()
            .map(|&m| (m, cone.clone()))
            .collect();
        let rows = slope_limit_check(&fam, 0.5, d.deepest[0]).unwrap();
        let target = 0.5f64.powf(0.5);
        for r in &rows {
            assert!((r.l_minus + target).abs() < 1e-12);
            // nothing lies above the maximum
            assert_eq!(r.a_m, 0.0);
        }
        let last = rows.last().unwrap();
        assert!((last.b_m - target).abs() / target <= 0.2, "{rows:?}");
        assert!(rows[2].err_b.abs() <= rows[0].err_b.abs());
    }
}
