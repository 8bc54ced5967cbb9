//! Linear and nonlinear solvers, and the Darcy pressure solve.

pub mod darcy;
pub mod linear;
pub mod newton;

pub use linear::{linear_solve, LinearSolver};
pub use newton::{backward_euler_step, stationary_solve, NewtonSettings, StepResult};
