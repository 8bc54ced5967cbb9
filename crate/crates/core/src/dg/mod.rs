//! Reference basis, quadrature, discrete spaces and functions.

pub mod basis;
pub mod quadrature;
pub mod space;

pub use space::{DGFunction, DGSpace};
