//! Numerical toolkit for bipartite quantum correlations and nonlocal games.
//!
//! Correlations are generated from finite-dimensional states and POVMs, game
//! values are bounded from below by see-saw optimization over tensor-product
//! strategies and from above by moment-matrix relaxations of the commuting
//! operator model.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod correlation;
pub mod error;
pub mod games;
pub mod io;
pub mod linalg;
pub mod npa;
pub mod povm;
pub mod sdp;
pub mod strategies;

pub use config::{Tolerances, TOL};
pub use error::{Error, Result};
pub use linalg::{CMatrix, EigenDecomposition, HermitianMatrix, C64};
