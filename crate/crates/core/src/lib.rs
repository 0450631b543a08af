//! Least energy solutions of the fractional (p,q)-Laplacian with a sup-norm
//! (Dirac point) right-hand side on grid domains, and tools to compare them
//! with their closed-form limits as p grows.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod commands;
pub mod config;
pub mod domain;
pub mod energy;
pub mod error;
pub mod io;
pub mod logspace;
pub mod optimize;
pub mod seminorm;
pub mod solver;
pub mod viscosity;

pub use error::{Error, Result};
