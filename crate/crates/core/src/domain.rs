//! Grid discretizations of bounded planar domains.
//!
//! A domain is a rectangular lattice `x = (i, j) * h` that contains every
//! interior node plus a collar of exterior nodes on which functions vanish.
//! Nodes are indexed row-major (x fastest), and that index order is the
//! lexicographic order used for every tie-break in the crate.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spatial dimension of every grid in this crate.
pub const DIM: usize = 2;

/// Shapes a domain can be built from.
///
/// Disks are centered at the origin. Rectangles and L-shapes occupy
/// `[0, width] x [0, height]`; the L-shape removes the closed
/// `notch_width x notch_height` corner at `(width, height)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Disk {
        radius: f64,
    },
    Rectangle {
        width: f64,
        height: f64,
    },
    LShape {
        width: f64,
        height: f64,
        notch_width: f64,
        notch_height: f64,
    },
    MaskFile {
        path: PathBuf,
    },
}

impl Shape {
    fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParams(format!(
                    "{what} must be positive, got {v}"
                )))
            }
        };
        match *self {
            Shape::Disk { radius } => positive(radius, "disk radius"),
            Shape::Rectangle { width, height } => {
                positive(width, "rectangle width")?;
                positive(height, "rectangle height")
            }
            Shape::LShape {
                width,
                height,
                notch_width,
                notch_height,
            } => {
                positive(width, "l_shape width")?;
                positive(height, "l_shape height")?;
                positive(notch_width, "notch width")?;
                positive(notch_height, "notch height")?;
                if notch_width >= width || notch_height >= height {
                    return Err(Error::InvalidParams(
                        "the notch must be smaller than the enclosing rectangle".into(),
                    ));
                }
                Ok(())
            }
            Shape::MaskFile { .. } => Ok(()),
        }
    }

    /// Strict interior test for analytic shapes.
    fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Disk { radius } => x.hypot(y) < radius,
            Shape::Rectangle { width, height } => x > 0.0 && x < width && y > 0.0 && y < height,
            Shape::LShape {
                width,
                height,
                notch_width,
                notch_height,
            } => {
                x > 0.0
                    && x < width
                    && y > 0.0
                    && y < height
                    && !(x >= width - notch_width && y >= height - notch_height)
            }
            Shape::MaskFile { .. } => unreachable!("mask shapes have no analytic membership"),
        }
    }

    /// Exact distance from an interior point to the complement of the shape.
    fn boundary_distance(&self, x: f64, y: f64) -> f64 {
        match *self {
            Shape::Disk { radius } => radius - x.hypot(y),
            Shape::Rectangle { width, height } => x.min(width - x).min(y).min(height - y),
            Shape::LShape {
                width,
                height,
                notch_width,
                notch_height,
            } => {
                let outer = x.min(width - x).min(y).min(height - y);
                let dx = (width - notch_width - x).max(0.0);
                let dy = (height - notch_height - y).max(0.0);
                outer.min(dx.hypot(dy))
            }
            Shape::MaskFile { .. } => unreachable!("mask shapes have no analytic boundary"),
        }
    }

    /// Lattice index window `[lo, hi]` guaranteed to contain every interior node.
    fn lattice_window(&self, h: f64) -> ([i64; 2], [i64; 2]) {
        let k = |v: f64| (v / h).ceil() as i64 + 1;
        match *self {
            Shape::Disk { radius } => ([-k(radius), -k(radius)], [k(radius), k(radius)]),
            Shape::Rectangle { width, height } | Shape::LShape { width, height, .. } => {
                ([0, 0], [k(width), k(height)])
            }
            Shape::MaskFile { .. } => unreachable!(),
        }
    }
}

/// A node-sampled bounded domain with its distance field.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDomain {
    pub shape: Shape,
    pub h: f64,
    /// Lattice index of node 0; its position is `lattice_origin * h`.
    pub lattice_origin: [i64; 2],
    /// Node counts along x and y.
    pub extent: [usize; 2],
    pub interior_mask: Vec<bool>,
    pub collar_width: usize,
    /// Distance to the complement of the domain, zero on exterior nodes.
    pub distance: Vec<f64>,
    pub inradius: f64,
    /// All nodes attaining the inradius, in index order.
    pub deepest: Vec<usize>,
    interior: Vec<usize>,
    interior_slot: Vec<usize>,
    nearest_exterior: Vec<(usize, f64)>,
}

const NOT_INTERIOR: usize = usize::MAX;

/// Collar width (in nodes) that keeps every interaction within `truncation`
/// on the grid.
pub fn collar_for_truncation(truncation: f64, h: f64) -> usize {
    (truncation / h).ceil() as usize + 1
}

/// Builds a grid domain. `collar_width = None` selects the default collar,
/// wide enough for the default kernel truncation (the interior diameter).
pub fn build_domain(shape: Shape, h: f64, collar_width: Option<usize>) -> Result<GridDomain> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidParams(format!(
            "grid spacing must be positive, got {h}"
        )));
    }
    shape.validate()?;
    let (h, interior_lattice) = match &shape {
        Shape::MaskFile { path } => read_mask_file(path)?,
        analytic => {
            let (lo, hi) = analytic.lattice_window(h);
            let mut pts = Vec::new();
            for j in lo[1]..=hi[1] {
                for i in lo[0]..=hi[0] {
                    if analytic.contains(i as f64 * h, j as f64 * h) {
                        pts.push([i, j]);
                    }
                }
            }
            (h, pts)
        }
    };
    if interior_lattice.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let mut bb_lo = [i64::MAX; 2];
    let mut bb_hi = [i64::MIN; 2];
    for p in &interior_lattice {
        for a in 0..DIM {
            bb_lo[a] = bb_lo[a].min(p[a]);
            bb_hi[a] = bb_hi[a].max(p[a]);
        }
    }
    let diameter =
        h * (((bb_hi[0] - bb_lo[0]).pow(2) + (bb_hi[1] - bb_lo[1]).pow(2)) as f64).sqrt();
    let collar = collar_width
        .unwrap_or_else(|| collar_for_truncation(diameter, h))
        .max(1);
    let c = collar as i64;
    let lattice_origin = [bb_lo[0] - c, bb_lo[1] - c];
    let extent = [
        (bb_hi[0] - bb_lo[0] + 1 + 2 * c) as usize,
        (bb_hi[1] - bb_lo[1] + 1 + 2 * c) as usize,
    ];
    let n = extent[0] * extent[1];
    let mut interior_mask = vec![false; n];
    for p in &interior_lattice {
        let ix = (p[0] - lattice_origin[0]) as usize;
        let iy = (p[1] - lattice_origin[1]) as usize;
        interior_mask[iy * extent[0] + ix] = true;
    }
    let interior: Vec<usize> = (0..n).filter(|&k| interior_mask[k]).collect();
    let mut interior_slot = vec![NOT_INTERIOR; n];
    for (slot, &node) in interior.iter().enumerate() {
        interior_slot[node] = slot;
    }

    let mut dom = GridDomain {
        shape,
        h,
        lattice_origin,
        extent,
        interior_mask,
        collar_width: collar,
        distance: vec![0.0; n],
        inradius: 0.0,
        deepest: Vec::new(),
        interior,
        interior_slot,
        nearest_exterior: Vec::new(),
    };
    dom.nearest_exterior = dom
        .interior
        .iter()
        .map(|&k| dom.search_nearest_exterior(k))
        .collect();
    dom.distance = distance_transform(&dom);
    dom.inradius = dom.distance.iter().copied().fold(0.0, f64::max);
    dom.deepest = (0..n)
        .filter(|&k| dom.distance[k] == dom.inradius)
        .collect();
    Ok(dom)
}

/// Serializable recipe for [`build_domain`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub shape: Shape,
    /// Grid spacing; mask files carry their own and ignore this.
    pub h: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collar_width: Option<usize>,
}

impl DomainSpec {
    pub fn build(&self) -> Result<GridDomain> {
        build_domain(self.shape.clone(), self.h, self.collar_width)
    }
}

/// Distance from every node to the complement of the domain.
///
/// Analytic shapes use their exact continuum boundary; mask domains use the
/// nearest non-interior node center. Exterior nodes get 0.
pub fn distance_transform(dom: &GridDomain) -> Vec<f64> {
    let mut d = vec![0.0; dom.node_count()];
    for (slot, &node) in dom.interior.iter().enumerate() {
        d[node] = match dom.shape {
            Shape::MaskFile { .. } => dom.nearest_exterior[slot].1,
            ref analytic => {
                let [x, y] = dom.position(node);
                analytic.boundary_distance(x, y)
            }
        };
    }
    d
}

impl GridDomain {
    pub fn dim(&self) -> usize {
        DIM
    }

    pub fn node_count(&self) -> usize {
        self.extent[0] * self.extent[1]
    }

    /// Interior node indices in ascending order.
    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }

    pub fn interior_count(&self) -> usize {
        self.interior.len()
    }

    pub fn is_interior(&self, node: usize) -> bool {
        node < self.node_count() && self.interior_mask[node]
    }

    /// Position of `node` within the interior list.
    pub fn interior_slot(&self, node: usize) -> Option<usize> {
        match self.interior_slot.get(node) {
            Some(&s) if s != NOT_INTERIOR => Some(s),
            _ => None,
        }
    }

    /// Integer grid coordinates (column, row) of a node.
    pub fn grid_coords(&self, node: usize) -> [i64; 2] {
        [
            (node % self.extent[0]) as i64,
            (node / self.extent[0]) as i64,
        ]
    }

    pub fn node_at(&self, col: i64, row: i64) -> Option<usize> {
        if col < 0 || row < 0 || col as usize >= self.extent[0] || row as usize >= self.extent[1] {
            None
        } else {
            Some(row as usize * self.extent[0] + col as usize)
        }
    }

    pub fn position(&self, node: usize) -> [f64; 2] {
        let [c, r] = self.grid_coords(node);
        [
            (self.lattice_origin[0] + c) as f64 * self.h,
            (self.lattice_origin[1] + r) as f64 * self.h,
        ]
    }

    pub fn node_distance(&self, a: usize, b: usize) -> f64 {
        let [ca, ra] = self.grid_coords(a);
        let [cb, rb] = self.grid_coords(b);
        self.h * (((ca - cb).pow(2) + (ra - rb).pow(2)) as f64).sqrt()
    }

    /// Diameter of the bounding box of the interior nodes.
    pub fn interior_diameter(&self) -> f64 {
        let c = self.collar_width as i64;
        let w = self.extent[0] as i64 - 2 * c - 1;
        let hgt = self.extent[1] as i64 - 2 * c - 1;
        self.h * ((w * w + hgt * hgt) as f64).sqrt()
    }

    /// Length covered by the collar on each side of the interior.
    pub fn collar_length(&self) -> f64 {
        self.collar_width as f64 * self.h
    }

    /// Nearest non-interior node of an interior node: `(node, distance)`,
    /// lowest index among ties.
    pub fn nearest_exterior(&self, slot: usize) -> (usize, f64) {
        self.nearest_exterior[slot]
    }

    /// The grid corner farthest from `node` (always exterior).
    pub fn farthest_corner(&self, node: usize) -> (usize, f64) {
        let (w, hgt) = (self.extent[0] as i64 - 1, self.extent[1] as i64 - 1);
        let mut best = (0usize, -1.0f64);
        for (c, r) in [(0, 0), (w, 0), (0, hgt), (w, hgt)] {
            let k = self.node_at(c, r).expect("corner inside grid");
            let d = self.node_distance(node, k);
            if d > best.1 || (d == best.1 && k < best.0) {
                best = (k, d);
            }
        }
        best
    }

    /// Interior nodes within `radius` of any of `centers`.
    pub fn nodes_within(&self, centers: &[usize], radius: f64) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .interior
            .iter()
            .copied()
            .filter(|&k| {
                centers
                    .iter()
                    .any(|&c| self.node_distance(k, c) <= radius + 1e-12 * self.h)
            })
            .collect();
        out.sort_unstable();
        out
    }

    fn search_nearest_exterior(&self, node: usize) -> (usize, f64) {
        let [c0, r0] = self.grid_coords(node);
        let max_k = self.extent[0].max(self.extent[1]) as i64;
        let mut best: Option<(i64, usize)> = None;
        for k in 1..=max_k {
            if let Some((d2, _)) = best {
                if k * k > d2 {
                    break;
                }
            }
            for dr in -k..=k {
                for dc in -k..=k {
                    if dr.abs() != k && dc.abs() != k {
                        continue;
                    }
                    let Some(j) = self.node_at(c0 + dc, r0 + dr) else {
                        continue;
                    };
                    if self.interior_mask[j] {
                        continue;
                    }
                    let d2 = dc * dc + dr * dr;
                    best = match best {
                        Some((bd, bj)) if bd < d2 || (bd == d2 && bj < j) => Some((bd, bj)),
                        _ => Some((d2, j)),
                    };
                }
            }
        }
        let (d2, j) = best.expect("the collar guarantees an exterior node");
        (j, self.h * (d2 as f64).sqrt())
    }
}

/// Reads a mask file: a header `rows cols h`, then `rows` lines of `0`/`1`
/// characters. The first text line is the top row (largest y).
fn read_mask_file(path: &Path) -> Result<(f64, Vec<[i64; 2]>)> {
    let bad = |reason: String| Error::BadMaskFile {
        path: path.to_path_buf(),
        reason,
    };
    let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| bad("missing header".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(bad(format!("header must be `rows cols h`, got `{header}`")));
    }
    let rows: usize = fields[0].parse().map_err(|_| bad("bad row count".into()))?;
    let cols: usize = fields[1]
        .parse()
        .map_err(|_| bad("bad column count".into()))?;
    let h: f64 = fields[2].parse().map_err(|_| bad("bad spacing".into()))?;
    if !(h.is_finite() && h > 0.0) || rows == 0 || cols == 0 {
        return Err(bad("rows, cols and h must be positive".into()));
    }
    let mut pts = Vec::new();
    let mut seen = 0;
    for (row, line) in lines.enumerate() {
        if row >= rows {
            return Err(bad(format!("more than {rows} mask rows")));
        }
        let line = line.trim();
        if line.chars().count() != cols {
            return Err(bad(format!(
                "row {row} has {} columns, expected {cols}",
                line.len()
            )));
        }
        for (col, ch) in line.chars().enumerate() {
            match ch {
                '1' => pts.push([col as i64, (rows - 1 - row) as i64]),
                '0' => {}
                other => return Err(bad(format!("unexpected character `{other}` in row {row}"))),
            }
        }
        seen += 1;
    }
    if seen != rows {
        return Err(bad(format!("expected {rows} mask rows, found {seen}")));
    }
    pts.sort_by_key(|p| (p[1], p[0]));
    Ok((h, pts))
}

/// Writes the interior mask of `dom` (trimmed to the interior bounding box)
/// in the mask file format.
pub fn write_mask_file(dom: &GridDomain, path: &Path) -> Result<()> {
    let c = dom.collar_width;
    let cols = dom.extent[0] - 2 * c;
    let rows = dom.extent[1] - 2 * c;
    let mut out = format!("{rows} {cols} {}\n", dom.h);
    for r in (0..rows).rev() {
        for col in 0..cols {
            let k = (r + c) * dom.extent[0] + col + c;
            out.push(if dom.interior_mask[k] { '1' } else { '0' });
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// A real function on the nodes of a domain, stored on interior nodes and
/// identically zero elsewhere.
#[derive(Debug, Clone)]
pub struct GridFunction {
    domain: Arc<GridDomain>,
    values: Vec<f64>,
}

impl GridFunction {
    /// `values` are given per interior node, in interior order.
    pub fn new(domain: Arc<GridDomain>, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.interior_count() {
            return Err(Error::InvalidParams(format!(
                "expected {} interior values, got {}",
                domain.interior_count(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(
                "grid function values must be finite".into(),
            ));
        }
        Ok(Self { domain, values })
    }

    pub fn zeros(domain: Arc<GridDomain>) -> Self {
        let n = domain.interior_count();
        Self {
            domain,
            values: vec![0.0; n],
        }
    }

    /// Samples `f(x, y)` at the interior nodes.
    pub fn from_fn(domain: Arc<GridDomain>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = domain
            .interior_nodes()
            .iter()
            .map(|&k| {
                let [x, y] = domain.position(k);
                f(x, y)
            })
            .collect();
        Self::new(domain, values)
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at any grid node; exactly 0 off the interior.
    pub fn at_node(&self, node: usize) -> f64 {
        self.domain
            .interior_slot(node)
            .map_or(0.0, |s| self.values[s])
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            domain: self.domain.clone(),
            values: self.values.iter().map(|v| t * v).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            domain: self.domain.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.domain.clone(), values)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn same_domain(&self, other: &GridFunction) -> bool {
        Arc::ptr_eq(&self.domain, &other.domain) || *self.domain == *other.domain
    }
}

/// The distance cone `max(R - |x - x0|, 0)` centered at node `center`.
pub fn cone_function(domain: &Arc<GridDomain>, center: usize) -> Result<GridFunction> {
    let r = domain.inradius;
    let depth = domain.distance.get(center).copied().unwrap_or(0.0);
    if !domain.is_interior(center) || depth < r - domain.h {
        return Err(Error::CenterTooShallow {
            depth,
            min_depth: r - domain.h,
        });
    }
    let values = domain
        .interior_nodes()
        .iter()
        .map(|&k| (r - domain.node_distance(k, center)).max(0.0))
        .collect();
    GridFunction::new(domain.clone(), values)
}
