//! Run configuration, mode drivers and output formats.

pub mod config;
pub mod runner;
pub mod table;
pub mod trace;
pub mod vtk;

pub use config::{Mode, RunConfig, SweepKind};
pub use runner::{converge, darcy, estimate, run, DarcyReport, RunReport};
pub use table::{ConvergenceTable, TableRow};
pub use trace::{read_trace, TraceWriter};
pub use vtk::{write_vtk, write_vtk_file, VtkFields};
