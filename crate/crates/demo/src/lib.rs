//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every operation returns a [`Field`]: a row-major image of the whole grid
//! (NaN outside the domain) plus a one-paragraph summary.

use std::sync::Arc;

use fracpq::domain::{build_domain, cone_function, GridDomain, GridFunction, Shape};
use fracpq::energy::EnergySpec;
use fracpq::seminorm::holder_seminorm;
use fracpq::solver::{solve_least_energy, SolverOpts};
use wasm_bindgen::prelude::*;

#[wasm_bindgen]
pub struct Field {
    cols: usize,
    rows: usize,
    values: Vec<f64>,
    summary: String,
}

#[wasm_bindgen]
impl Field {
    #[wasm_bindgen(getter)]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[wasm_bindgen(getter)]
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Row-major, row 0 at the bottom.
    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn summary(&self) -> String {
        self.summary.clone()
    }
}

fn shape(name: &str) -> Result<Shape, String> {
    match name {
        "disk" => Ok(Shape::Disk { radius: 0.5 }),
        "square" => Ok(Shape::Rectangle {
            width: 1.0,
            height: 1.0,
        }),
        "rectangle" => Ok(Shape::Rectangle {
            width: 1.0,
            height: 0.5,
        }),
        "lshape" => Ok(Shape::LShape {
            width: 1.0,
            height: 1.0,
            notch_width: 0.5,
            notch_height: 0.5,
        }),
        other => Err(format!("unknown shape {other:?}")),
    }
}

fn domain(name: &str, cells: u32) -> Result<Arc<GridDomain>, String> {
    if !(4..=128).contains(&cells) {
        return Err(format!(
            "cells per unit length must be in 4..=128, got {cells}"
        ));
    }
    build_domain(shape(name)?, 1.0 / cells as f64, None)
        .map(Arc::new)
        .map_err(|e| e.to_string())
}

fn image(dom: &GridDomain, value: impl Fn(usize) -> Option<f64>, summary: String) -> Field {
    let values = (0..dom.node_count())
        .map(|k| value(k).unwrap_or(f64::NAN))
        .collect();
    Field {
        cols: dom.extent[0],
        rows: dom.extent[1],
        values,
        summary,
    }
}

fn function_image(u: &GridFunction, summary: String) -> Field {
    let dom = u.domain();
    image(
        dom,
        |k| dom.interior_slot(k).map(|s| u.values()[s]),
        summary,
    )
}

pub fn distance_field_impl(shape: &str, cells: u32) -> Result<Field, String> {
    let dom = domain(shape, cells)?;
    let deepest: Vec<String> = dom
        .deepest
        .iter()
        .map(|&k| {
            let [x, y] = dom.position(k);
            format!("({x:.4}, {y:.4})")
        })
        .collect();
    let summary = format!(
        "{} interior nodes, inradius R = {:.6}, attained at {}",
        dom.interior_count(),
        dom.inradius,
        deepest.join(", ")
    );
    Ok(image(
        &dom,
        |k| dom.is_interior(k).then(|| dom.distance[k]),
        summary,
    ))
}

pub fn cone_impl(shape: &str, cells: u32, s: f64) -> Result<Field, String> {
    if !(s > 0.0 && s < 1.0) {
        return Err(format!("s must lie in (0, 1), got {s}"));
    }
    let dom = domain(shape, cells)?;
    let cone = cone_function(&dom, dom.deepest[0]).map_err(|e| e.to_string())?;
    let hv = holder_seminorm(&cone, s).map_err(|e| e.to_string())?;
    let target = dom.inradius.powf(1.0 - s);
    let summary = format!(
        "cone at the first deepest node: sup = {:.6}, [cone]_{s} = {:.6}, R^(1-s) = {target:.6}, relative gap {:.2e}",
        cone.sup_norm(),
        hv.value,
        (hv.value - target).abs() / target
    );
    Ok(function_image(&cone, summary))
}

pub fn solve_impl(
    shape: &str,
    cells: u32,
    alpha: f64,
    beta: f64,
    p: f64,
    q: f64,
    lambda: f64,
) -> Result<Field, String> {
    if cells > 24 {
        return Err("solves are limited to 24 cells per unit length in the browser".into());
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(format!("Lambda must be positive, got {lambda}"));
    }
    let dom = domain(shape, cells)?;
    let es = EnergySpec::with_log_mu(alpha, beta, p, q, p * lambda.ln(), 2.0 * p.max(q), &dom)
        .map_err(|e| e.to_string())?;
    let opts = SolverOpts {
        random_starts: 0,
        max_iters: 400,
        ..SolverOpts::default()
    };
    let sol = solve_least_energy(&es, &dom, &opts).map_err(|e| e.to_string())?;
    let [x, y] = dom.position(sol.x_u);
    let summary = format!(
        "{:?}: energy {:.6e}, sup-norm {:.6} at ({x:.4}, {y:.4}), [u]_alpha = {:.6}, [u]_beta = {:.6}, {} iterations",
        es.case, sol.energy, sol.sup_norm, sol.semi_alpha, sol.semi_beta, sol.iterations
    );
    Ok(function_image(&sol.u, summary))
}

/// Distance to the complement on a unit-scale shape.
#[wasm_bindgen]
pub fn distance_field(shape: &str, cells: u32) -> Result<Field, JsError> {
    distance_field_impl(shape, cells).map_err(|e| JsError::new(&e))
}

/// The distance cone at the deepest node and its s-Hölder seminorm.
#[wasm_bindgen]
pub fn cone(shape: &str, cells: u32, s: f64) -> Result<Field, JsError> {
    cone_impl(shape, cells, s).map_err(|e| JsError::new(&e))
}

/// A least energy solution with `mu = Lambda^p`.
#[wasm_bindgen]
pub fn solve(
    shape: &str,
    cells: u32,
    alpha: f64,
    beta: f64,
    p: f64,
    q: f64,
    lambda: f64,
) -> Result<Field, JsError> {
    solve_impl(shape, cells, alpha, beta, p, q, lambda).map_err(|e| JsError::new(&e))
}
