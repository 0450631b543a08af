//! Discrete Gagliardo seminorms, the weak and pointwise fractional
//! m-Laplacian, Hölder seminorms and the one-sided Hölder slopes.
//!
//! All pair sums run over ordered pairs of grid nodes (interior and collar).
//! Since functions vanish off the interior, pairs with one exterior node
//! collapse into a per-node weight, and collar-collar pairs contribute nothing.
//! Powers are formed as `exp(m ln|d| + ln w)` against a shift equal to the
//! largest exponent, so only the logarithm of `[u]^m` is ever materialized.

use std::f64::consts::PI;
use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{GridDomain, GridFunction, DIM};
use crate::error::{Error, Result};
use crate::logspace::{
    ln_abs_floored, log_sum_exp, map_chunks, tree_reduce, triangular_ranges, CompensatedSum,
    REDUCTION_CHUNKS,
};

/// Parameters of one Gagliardo seminorm `[.]_{s,m}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracParams {
    pub s: f64,
    pub m: f64,
    /// Kernel truncation radius: pairs farther apart are replaced by the
    /// analytic tail.
    pub truncation: f64,
    pub tail_correction: bool,
}

impl FracParams {
    pub fn new(s: f64, m: f64, truncation: f64, tail_correction: bool) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidParams(format!(
                "order s must lie in (0,1), got {s}"
            )));
        }
        if !(m > 1.0 && m.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "exponent m must exceed 1, got {m}"
            )));
        }
        if !(truncation > 0.0 && truncation.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "truncation radius must be positive, got {truncation}"
            )));
        }
        Ok(Self {
            s,
            m,
            truncation,
            tail_correction,
        })
    }

    /// Truncation at the interior diameter, tail correction on.
    pub fn for_domain(s: f64, m: f64, domain: &GridDomain) -> Result<Self> {
        Self::new(s, m, default_truncation(domain), true)
    }

    /// Checks the truncation against the interior diameter and the collar.
    pub fn validate_for(&self, domain: &GridDomain) -> Result<()> {
        let diameter = domain.interior_diameter();
        if self.truncation < diameter * (1.0 - 1e-12) {
            return Err(Error::TruncationTooShort {
                truncation: self.truncation,
                diameter,
            });
        }
        if domain.collar_length() < self.truncation * (1.0 - 1e-12) {
            return Err(Error::CollarTooThin {
                collar: domain.collar_length(),
                truncation: self.truncation,
            });
        }
        Ok(())
    }
}

/// The default truncation radius: the diameter of the interior bounding box.
pub fn default_truncation(domain: &GridDomain) -> f64 {
    domain.interior_diameter().max(domain.h)
}

/// Surface measure of the unit sphere in R^DIM.
pub const UNIT_SPHERE_MEASURE: f64 = 2.0 * PI;

/// Precomputed kernel weights of one seminorm on one domain.
#[derive(Debug, Clone)]
pub struct SeminormKernel {
    fp: FracParams,
    domain: Arc<GridDomain>,
    coords: Vec<[i32; 2]>,
    half_w: i32,
    span_h: i32,
    /// `ln(2 |d|^{-N-sm} h^{2N})` per lattice offset, `-inf` beyond truncation.
    log_pair_weight: Vec<f64>,
    /// `ln` of the summed exterior interaction (collar pairs plus tail) per interior node.
    log_ext_weight: Vec<f64>,
}

impl SeminormKernel {
    pub fn new(domain: &Arc<GridDomain>, fp: FracParams) -> Result<Self> {
        let domain = domain.clone();
        if domain.collar_length() < fp.truncation * (1.0 - 1e-12) {
            return Err(Error::CollarTooThin {
                collar: domain.collar_length(),
                truncation: fp.truncation,
            });
        }
        let coords: Vec<[i32; 2]> = domain
            .interior_nodes()
            .iter()
            .map(|&k| {
                let [c, r] = domain.grid_coords(k);
                [c as i32, r as i32]
            })
            .collect();
        let (mut cmin, mut cmax, mut rmin, mut rmax) = (i32::MAX, i32::MIN, i32::MAX, i32::MIN);
        for &[c, r] in &coords {
            cmin = cmin.min(c);
            cmax = cmax.max(c);
            rmin = rmin.min(r);
            rmax = rmax.max(r);
        }
        let half_w = cmax - cmin;
        let span_h = rmax - rmin;
        let h = domain.h;
        let n_dim = DIM as f64;
        let exponent = n_dim + fp.s * fp.m;
        let log_h = h.ln();
        let t_lattice2 = (fp.truncation / h).powi(2) * (1.0 + 1e-12);
        let pair_log_weight = |dc: i32, dr: i32| -> f64 {
            let d2 = (dc as i64 * dc as i64 + dr as i64 * dr as i64) as f64;
            if d2 == 0.0 || d2 > t_lattice2 {
                f64::NEG_INFINITY
            } else {
                std::f64::consts::LN_2 - exponent * (0.5 * d2.ln() + log_h) + 2.0 * n_dim * log_h
            }
        };
        let width = (2 * half_w + 1) as usize;
        let mut log_pair_weight = vec![f64::NEG_INFINITY; width * (span_h as usize + 1)];
        for dr in 0..=span_h {
            for dc in -half_w..=half_w {
                log_pair_weight[dr as usize * width + (dc + half_w) as usize] =
                    pair_log_weight(dc, dr);
            }
        }

        let log_tail = if fp.tail_correction {
            (2.0 * UNIT_SPHERE_MEASURE / (fp.s * fp.m)).ln() - fp.s * fp.m * fp.truncation.ln()
                + n_dim * log_h
        } else {
            f64::NEG_INFINITY
        };
        let reach = (fp.truncation / h).floor() as i64 + 1;
        let ranges = crate::logspace::even_ranges(coords.len(), REDUCTION_CHUNKS);
        let chunks = map_chunks(&ranges, |range: Range<usize>| {
            let mut out = Vec::with_capacity(range.len());
            let mut terms = Vec::new();
            for slot in range {
                let node = domain.interior_nodes()[slot];
                let [c0, r0] = domain.grid_coords(node);
                terms.clear();
                for dr in -reach..=reach {
                    for dc in -reach..=reach {
                        let lw = pair_log_weight(dc as i32, dr as i32);
                        if lw == f64::NEG_INFINITY {
                            continue;
                        }
                        let exterior = match domain.node_at(c0 + dc, r0 + dr) {
                            Some(j) => !domain.interior_mask[j],
                            None => true,
                        };
                        if exterior {
                            terms.push(lw);
                        }
                    }
                }
                terms.push(log_tail);
                out.push(log_sum_exp(&terms));
            }
            out
        });
        let log_ext_weight = chunks.into_iter().flatten().collect();
        Ok(Self {
            fp,
            domain,
            coords,
            half_w,
            span_h,
            log_pair_weight,
            log_ext_weight,
        })
    }

    pub fn params(&self) -> &FracParams {
        &self.fp
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    /// `ln(2 |x_i - x_j|^{-N-sm} h^{2N})` for interior slots `i < j`.
    #[inline]
    pub(crate) fn log_pair_weight(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let [ca, ra] = self.coords[a];
        let [cb, rb] = self.coords[b];
        let dr = rb - ra;
        let dc = cb - ca;
        debug_assert!(dr >= 0 && dr <= self.span_h);
        self.log_pair_weight
            [dr as usize * (2 * self.half_w as usize + 1) + (dc + self.half_w) as usize]
    }

    fn check(&self, u: &[f64]) {
        assert_eq!(u.len(), self.coords.len(), "grid function length mismatch");
    }

    /// Largest summand exponent, the shift of the log-space sums.
    fn shift(&self, u: &[f64], diffs: &PairDiffs) -> f64 {
        let m = self.fp.m;
        let n = u.len();
        let ranges = triangular_ranges(n, REDUCTION_CHUNKS);
        let partial = map_chunks(&ranges, |rows: Range<usize>| {
            let mut best = f64::NEG_INFINITY;
            for i in rows {
                let base = pair_base(i, n);
                let row = &diffs.log_abs[base..base + (n - 1 - i)];
                for (k, &ld) in row.iter().enumerate() {
                    if ld == f64::NEG_INFINITY {
                        continue;
                    }
                    best = best.max(m * ld + self.log_pair_weight(i, i + 1 + k));
                }
                let le = ln_abs_floored(u[i]);
                if le > f64::NEG_INFINITY {
                    best = best.max(m * le + self.log_ext_weight[i]);
                }
            }
            best
        });
        partial.into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `ln [u]^m`.
    pub fn log_power(&self, u: &[f64]) -> f64 {
        let diffs = PairDiffs::new(u);
        self.log_power_with(u, &diffs)
    }

    pub fn log_power_with(&self, u: &[f64], diffs: &PairDiffs) -> f64 {
        self.check(u);
        let shift = self.shift(u, diffs);
        if shift == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let sum = self.weighted_sum(u, diffs, shift, None);
        shift + sum.ln()
    }

    /// `ln [u]^m` together with the normalized gradient `grad([u]^m) / [u]^m`,
    /// written into `grad`. For `u = 0` the gradient is set to zero.
    pub fn log_power_and_grad(&self, u: &[f64], diffs: &PairDiffs, grad: &mut [f64]) -> f64 {
        self.check(u);
        assert_eq!(grad.len(), u.len());
        let shift = self.shift(u, diffs);
        if shift == f64::NEG_INFINITY {
            grad.iter_mut().for_each(|g| *g = 0.0);
            return f64::NEG_INFINITY;
        }
        let sum = self.weighted_sum(u, diffs, shift, Some(grad));
        for g in grad.iter_mut() {
            *g /= sum;
        }
        shift + sum.ln()
    }

    /// `sum exp(term - shift)`; with `grad`, also accumulates the unnormalized
    /// `sum d/du_k exp(term - shift)`.
    fn weighted_sum(
        &self,
        u: &[f64],
        diffs: &PairDiffs,
        shift: f64,
        grad: Option<&mut [f64]>,
    ) -> f64 {
        let m = self.fp.m;
        let n = u.len();
        let want_grad = grad.is_some();
        let ranges = triangular_ranges(n, REDUCTION_CHUNKS);
        let partial = map_chunks(&ranges, |rows: Range<usize>| {
            let mut acc = CompensatedSum::new();
            let mut g = if want_grad { vec![0.0; n] } else { Vec::new() };
            for i in rows {
                let ui = u[i];
                let base = pair_base(i, n);
                let row = &diffs.log_abs[base..base + (n - 1 - i)];
                let mut gi = 0.0;
                for (k, &ld) in row.iter().enumerate() {
                    if ld == f64::NEG_INFINITY {
                        continue;
                    }
                    let j = i + 1 + k;
                    let e = (m * ld + self.log_pair_weight(i, j) - shift).exp();
                    acc.add(e);
                    if want_grad {
                        let t = m * e / (ui - u[j]);
                        gi += t;
                        g[j] -= t;
                    }
                }
                let le = ln_abs_floored(ui);
                if le > f64::NEG_INFINITY {
                    let e = (m * le + self.log_ext_weight[i] - shift).exp();
                    acc.add(e);
                    if want_grad {
                        gi += m * e / ui;
                    }
                }
                if want_grad {
                    g[i] += gi;
                }
            }
            (acc, g)
        });
        let (acc, g) = tree_reduce(partial, |(mut a, mut ga), (b, gb)| {
            a.merge(&b);
            for (x, y) in ga.iter_mut().zip(&gb) {
                *x += y;
            }
            (a, ga)
        })
        .unwrap_or_else(|| {
            (
                CompensatedSum::new(),
                vec![0.0; if want_grad { n } else { 0 }],
            )
        });
        if let Some(grad) = grad {
            grad.copy_from_slice(&g);
        }
        acc.value()
    }

    /// Weak pairing `<(-Delta_m)^s u, v>` in linear scale.
    pub fn pairing(&self, u: &[f64], v: &[f64]) -> f64 {
        self.check(u);
        self.check(v);
        let diffs = PairDiffs::new(u);
        let shift = self.shift(u, &diffs);
        if shift == f64::NEG_INFINITY {
            return 0.0;
        }
        let m = self.fp.m;
        let n = u.len();
        let ranges = triangular_ranges(n, REDUCTION_CHUNKS);
        let partial = map_chunks(&ranges, |rows: Range<usize>| {
            let mut acc = CompensatedSum::new();
            for i in rows {
                let base = pair_base(i, n);
                let row = &diffs.log_abs[base..base + (n - 1 - i)];
                for (k, &ld) in row.iter().enumerate() {
                    if ld == f64::NEG_INFINITY {
                        continue;
                    }
                    let j = i + 1 + k;
                    let e = (m * ld + self.log_pair_weight(i, j) - shift).exp();
                    acc.add(e * ((v[i] - v[j]) / (u[i] - u[j])));
                }
                let le = ln_abs_floored(u[i]);
                if le > f64::NEG_INFINITY {
                    let e = (m * le + self.log_ext_weight[i] - shift).exp();
                    acc.add(e * (v[i] / u[i]));
                }
            }
            acc
        });
        let acc = tree_reduce(partial, |mut a, b| {
            a.merge(&b);
            a
        })
        .unwrap_or_default();
        acc.value() * shift.exp()
    }

    /// Pointwise operator at interior slot `i`:
    /// `2 sum_j |u_i - u_j|^{m-2} (u_j - u_i) |x_i - x_j|^{-N-sm} h^N` plus the
    /// exterior and tail contributions.
    pub fn pointwise(&self, u: &[f64], i: usize) -> f64 {
        let (pos, neg) = self.pointwise_log_parts(u, i);
        pos.exp() - neg.exp()
    }

    /// Logarithms of the positive and negative parts of [`Self::pointwise`].
    pub fn pointwise_log_parts(&self, u: &[f64], i: usize) -> (f64, f64) {
        self.check(u);
        let m = self.fp.m;
        let log_hn = DIM as f64 * self.domain.h.ln();
        let ui = u[i];
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (j, &uj) in u.iter().enumerate() {
            if j == i {
                continue;
            }
            let ld = ln_abs_floored(uj - ui);
            if ld == f64::NEG_INFINITY {
                continue;
            }
            let t = (m - 1.0) * ld + self.log_pair_weight(i, j) - log_hn;
            if uj > ui {
                pos.push(t);
            } else {
                neg.push(t);
            }
        }
        let le = ln_abs_floored(ui);
        if le > f64::NEG_INFINITY {
            let t = (m - 1.0) * le + self.log_ext_weight[i] - log_hn;
            if ui < 0.0 {
                pos.push(t);
            } else {
                neg.push(t);
            }
        }
        (log_sum_exp(&pos), log_sum_exp(&neg))
    }
}

/// `ln |u_i - u_j|` for all interior pairs `i < j`, row-major.
#[derive(Debug, Clone)]
pub struct PairDiffs {
    log_abs: Vec<f64>,
}

impl PairDiffs {
    pub fn new(u: &[f64]) -> Self {
        let n = u.len();
        let ranges = triangular_ranges(n, REDUCTION_CHUNKS);
        let parts = map_chunks(&ranges, |rows: Range<usize>| {
            let mut out = Vec::new();
            for i in rows {
                let ui = u[i];
                out.extend(u[i + 1..].iter().map(|&uj| ln_abs_floored(ui - uj)));
            }
            out
        });
        Self {
            log_abs: parts.concat(),
        }
    }
}

/// Index of pair `(i, i+1)` in the row-major upper triangle of an `n x n` table.
#[inline]
fn pair_base(i: usize, n: usize) -> usize {
    i * (2 * n - i - 1) / 2
}

fn kernel_for(u: &GridFunction, fp: &FracParams) -> Result<SeminormKernel> {
    SeminormKernel::new(u.domain(), *fp)
}

/// Discrete Gagliardo seminorm `[u]_{s,m}`.
pub fn gagliardo(u: &GridFunction, fp: &FracParams) -> Result<f64> {
    Ok((gagliardo_log_power(u, fp)? / fp.m).exp())
}

/// `ln [u]_{s,m}^m`, `-inf` for `u = 0`.
pub fn gagliardo_log_power(u: &GridFunction, fp: &FracParams) -> Result<f64> {
    Ok(kernel_for(u, fp)?.log_power(u.values()))
}

/// Discrete weak pairing `<(-Delta_m)^s u, v>`.
pub fn pairing(u: &GridFunction, v: &GridFunction, fp: &FracParams) -> Result<f64> {
    if !u.same_domain(v) {
        return Err(Error::DomainMismatch);
    }
    Ok(kernel_for(u, fp)?.pairing(u.values(), v.values()))
}

/// Pointwise fractional m-Laplacian at interior node `node`.
pub fn pointwise_lsm(u: &GridFunction, node: usize, fp: &FracParams) -> Result<f64> {
    let slot = u
        .domain()
        .interior_slot(node)
        .ok_or(Error::NotInterior(node))?;
    Ok(kernel_for(u, fp)?.pointwise(u.values(), slot))
}

/// Value of a Hölder seminorm and the lexicographically first node pair attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderValue {
    pub value: f64,
    pub pair: (usize, usize),
}

impl HolderValue {
    fn better(self, other: HolderValue) -> HolderValue {
        if other.value > self.value || (other.value == self.value && other.pair < self.pair) {
            other
        } else {
            self
        }
    }
}

/// `ln |x_i - x_j|` lookup over lattice offsets of interior pairs.
struct OffsetLogLengths {
    coords: Vec<[i32; 2]>,
    half_w: i32,
    table: Vec<f64>,
}

impl OffsetLogLengths {
    fn new(domain: &GridDomain) -> Self {
        let coords: Vec<[i32; 2]> = domain
            .interior_nodes()
            .iter()
            .map(|&k| {
                let [c, r] = domain.grid_coords(k);
                [c as i32, r as i32]
            })
            .collect();
        let cmin = coords.iter().map(|c| c[0]).min().unwrap_or(0);
        let cmax = coords.iter().map(|c| c[0]).max().unwrap_or(0);
        let rmin = coords.iter().map(|c| c[1]).min().unwrap_or(0);
        let rmax = coords.iter().map(|c| c[1]).max().unwrap_or(0);
        let half_w = cmax - cmin;
        let span_h = rmax - rmin;
        let width = (2 * half_w + 1) as usize;
        let mut table = vec![0.0; width * (span_h as usize + 1)];
        for dr in 0..=span_h {
            for dc in -half_w..=half_w {
                let d2 = (dc * dc + dr * dr) as f64;
                table[dr as usize * width + (dc + half_w) as usize] = 0.5 * d2.ln() + domain.h.ln();
            }
        }
        Self {
            coords,
            half_w,
            table,
        }
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let dr = self.coords[b][1] - self.coords[a][1];
        let dc = self.coords[b][0] - self.coords[a][0];
        self.table[dr as usize * (2 * self.half_w as usize + 1) + (dc + self.half_w) as usize]
    }

    /// The table with every entry replaced by `|x_i - x_j|^s`.
    fn powered(&self, s: f64) -> Vec<f64> {
        self.table.iter().map(|&l| (s * l).exp()).collect()
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let dr = self.coords[b][1] - self.coords[a][1];
        let dc = self.coords[b][0] - self.coords[a][0];
        dr as usize * (2 * self.half_w as usize + 1) + (dc + self.half_w) as usize
    }
}

/// Discrete s-Hölder seminorm: the largest `|u_i - u_j| / |x_i - x_j|^s` over
/// all node pairs of the grid.
pub fn holder_seminorm(u: &GridFunction, s: f64) -> Result<HolderValue> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::InvalidParams(format!(
            "Hölder order must lie in (0,1], got {s}"
        )));
    }
    let dom = u.domain();
    let vals = u.values();
    let n = vals.len();
    let lens = OffsetLogLengths::new(dom);
    let pow = lens.powered(s);
    let nodes = dom.interior_nodes();
    let ranges = triangular_ranges(n, REDUCTION_CHUNKS);
    let start = HolderValue {
        value: 0.0,
        pair: (0, 1),
    };
    let partial = map_chunks(&ranges, |rows: Range<usize>| {
        let mut best = start;
        for i in rows {
            let ui = vals[i];
            let mut row_best = start;
            for j in i + 1..n {
                let q = (ui - vals[j]).abs() / pow[lens.index(i, j)];
                if q >= row_best.value {
                    row_best = row_best.better(HolderValue {
                        value: q,
                        pair: (nodes[i], nodes[j]),
                    });
                }
            }
            best = best.better(row_best);
            let (ext, dist) = dom.nearest_exterior(i);
            let q = ui.abs() / dist.powf(s);
            let pair = if ext < nodes[i] {
                (ext, nodes[i])
            } else {
                (nodes[i], ext)
            };
            best = best.better(HolderValue { value: q, pair });
        }
        best
    });
    Ok(partial.into_iter().fold(start, HolderValue::better))
}

/// One-sided Hölder slopes at a node: the largest and smallest
/// `(u_j - u_i) / |x_j - x_i|^s` over all other grid nodes.
pub fn upper_lower_slope(u: &GridFunction, node: usize, s: f64) -> Result<(f64, f64)> {
    let slot = u
        .domain()
        .interior_slot(node)
        .ok_or(Error::NotInterior(node))?;
    let lens = OffsetLogLengths::new(u.domain());
    Ok(slopes_at(u, &lens, slot, s))
}

/// `(L+, L-)` at every interior node, in interior order.
pub fn slopes_all(u: &GridFunction, s: f64) -> Vec<(f64, f64)> {
    let lens = OffsetLogLengths::new(u.domain());
    let ranges = crate::logspace::even_ranges(u.values().len(), REDUCTION_CHUNKS);
    map_chunks(&ranges, |r: Range<usize>| {
        r.map(|slot| slopes_at(u, &lens, slot, s))
            .collect::<Vec<_>>()
    })
    .concat()
}

fn slopes_at(u: &GridFunction, lens: &OffsetLogLengths, i: usize, s: f64) -> (f64, f64) {
    let dom = u.domain();
    let vals = u.values();
    let ui = vals[i];
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    for (j, &uj) in vals.iter().enumerate() {
        if j == i {
            continue;
        }
        let q = (uj - ui) / (s * lens.get(i, j)).exp();
        hi = hi.max(q);
        lo = lo.min(q);
    }
    let node = dom.interior_nodes()[i];
    let (_, near) = dom.nearest_exterior(i);
    let (_, far) = dom.farthest_corner(node);
    for dist in [near, far] {
        let q = -ui / dist.powf(s);
        hi = hi.max(q);
        lo = lo.min(q);
    }
    (hi, lo)
}
