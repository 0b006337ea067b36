//! Averaged (dispersion-managed) nonlinear Schrödinger dynamics on periodic
//! lattices, with the continuum-symbol reference solver, conservation
//! monitors, continuum-limit studies and functional-inequality verifiers.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod lattice;
pub mod quadrature;
pub mod spectral;

pub use error::{Error, Result};
