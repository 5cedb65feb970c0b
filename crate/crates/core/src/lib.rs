//! Spectral simulation and verification tools for two-dimensional MHD
//! perturbations of Couette flow in a constant magnetic field.
//!
//! The per-mode linear model lives in [`linear`], the pseudo-spectral
//! nonlinear solver in [`solver`], energy functionals and the bootstrap
//! monitor in [`diagnostics`], and full runs and parameter scans in
//! [`harness`] and [`scan`].

// `!(x > 0.0)` style checks are intentional: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod harness;
pub mod linear;
pub mod ode;
pub mod params;
pub mod scan;
pub mod snapshot;
pub mod solver;
pub mod symbols;
pub mod weights;

pub use error::{Error, Result};
pub use params::{Frequency, Params};
