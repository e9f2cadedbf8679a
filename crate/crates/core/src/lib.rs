//! Boundary-integral solver for the periodic Dirichlet problem for the
//! Laplace operator in a plane perforated by one small hole per cell.

// `!(x > 0.0)` style tests are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod continuation;
pub mod error;
pub mod field;
pub mod geometry;
pub mod lattice_green;
pub mod layer_potentials;
pub mod solver;
pub mod special;

pub use error::{Error, Result};
