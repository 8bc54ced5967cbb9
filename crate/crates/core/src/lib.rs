//! Time-space adaptive symmetric interior penalty DG solver for semi-linear
//! advection-diffusion-reaction systems on triangular meshes.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptivity;
pub mod assembly;
pub mod dg;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod io;
pub mod mesh;
pub mod problems;
pub mod solver;

pub use error::{Error, Result};
