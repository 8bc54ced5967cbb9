//! Drives the run modes and writes their artifacts.

use super::config::{Mode, RunConfig, Setup, SweepKind};
use super::table::{ConvergenceTable, TableRow};
use super::trace::{fmt_real, TraceWriter};
use super::vtk::{write_vtk_file, VtkFields};
use crate::adaptivity::{adaptive_run, prepare_initial_mesh, RunOutcome, StepView};
use crate::assembly::Assembler;
use crate::dg::space::{DGFunction, DGSpace};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::solver::darcy::DarcySolution;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

pub struct RunReport {
    pub outcome: RunOutcome,
    pub output_dir: PathBuf,
    pub initial_cells: usize,
    /// The initial-mesh iteration hit its cap.
    pub preparation_capped: bool,
    pub runtime_s: f64,
}

impl RunReport {
    pub fn summary_entries(&self) -> Vec<(&'static str, String)> {
        let o = &self.outcome;
        let mut v = vec![
            ("steps", o.trace.records.len().to_string()),
            ("total_time", fmt_real(o.trace.total_time())),
            ("weighted_dofs", o.trace.weighted_dofs().map(fmt_real).unwrap_or_default()),
            ("eta_S_sq", fmt_real(o.estimate.spatial_sq)),
            ("eta_T_sq", fmt_real(o.estimate.temporal_sq)),
            ("eta_T_tilde_sq_sum", fmt_real(o.estimate.tilde_temporal_sq)),
            ("initial_cells", self.initial_cells.to_string()),
            ("preparation_capped", self.preparation_capped.to_string()),
        ];
        if let Some(e) = &o.errors {
            v.push(("error_star", fmt_real(e.star_norm)));
            v.push(("final_l2_error", fmt_real(e.final_l2)));
        }
        v
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn solution_fields(solution: &[DGFunction], s1: Vec<f64>) -> VtkFields {
    let mut f = VtkFields::new();
    for (i, u) in solution.iter().enumerate() {
        let name = if solution.len() == 1 { "u".to_string() } else { format!("u{}", i + 1) };
        f = f.solution(&name, u);
    }
    let level = solution[0].space.mesh().cells().iter().map(|c| c.level as f64).collect();
    f.cell("eta_S1_sq", s1).cell("level", level)
}

fn dump_matrix(setup: &Setup, mesh: &Mesh, dir: &Path) -> Result<()> {
    let space = DGSpace::new(Arc::new(mesh.clone()), setup.options.degree)?;
    let a = Assembler::new(&space, &setup.problem)?.stiffness(0.0);
    a.write_matrix_market(BufWriter::new(File::create(dir.join("stiffness.mtx"))?))?;
    Ok(())
}

/// Adaptive or uniform run with trace, snapshots and summary under `dir`.
pub fn run(cfg: &RunConfig, dir: &Path) -> Result<RunReport> {
    let start = Instant::now();
    let setup = cfg.setup()?;
    create_dir(dir)?;
    let mut mesh = setup.initial_mesh()?;
    let mut tau = setup.options.tau0;
    let mut capped = false;
    if cfg.mode == Mode::Adaptive && cfg.prepare_mesh {
        (mesh, tau, capped) = prepare_initial_mesh(&setup.problem, mesh, &setup.options)?;
    }
    if cfg.dump_matrix {
        dump_matrix(&setup, &mesh, dir)?;
    }
    let initial_cells = mesh.num_cells();
    let mut trace = TraceWriter::create(&dir.join("trace.csv"))?;
    let every = cfg.every;
    let mut observer = |v: &StepView| -> Result<()> {
        trace.push(v.record)?;
        if every > 0 && v.record.step.is_multiple_of(every) {
            let f = solution_fields(v.solution, v.s1_elements.to_vec());
            let title = format!("{} step {} t={}", setup.problem.name, v.record.step, v.record.t);
            write_vtk_file(
                &dir.join(format!("step_{:05}.vtk", v.record.step)),
                v.solution[0].space.mesh(),
                &title,
                &f,
            )?;
        }
        Ok(())
    };
    let outcome = adaptive_run(&setup.problem, mesh, tau, &setup.options, &mut observer);
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            trace.summary(&[("aborted", e.to_string().replace('\n', " "))])?;
            return Err(e);
        }
    };
    let report =
        RunReport { outcome, output_dir: dir.to_path_buf(), initial_cells, preparation_capped: capped, runtime_s: 0.0 };
    trace.summary(&report.summary_entries())?;
    let sol = &report.outcome.solution;
    let f = solution_fields(sol, vec![0.0; sol[0].space.mesh().num_cells()]);
    write_vtk_file(&dir.join("final.vtk"), sol[0].space.mesh(), &format!("{} final", setup.problem.name), &f)?;
    Ok(RunReport { runtime_s: start.elapsed().as_secs_f64(), ..report })
}

fn table_row(parameter: f64, h: f64, tau: f64, out: &RunOutcome, start: Instant) -> Result<TableRow> {
    let e = out.errors.as_ref().ok_or_else(|| Error::MissingExactSolution("run without exact solution".into()))?;
    Ok(TableRow {
        parameter,
        h,
        tau,
        steps: out.trace.records.len(),
        weighted_dofs: out.trace.weighted_dofs()?,
        error: e.star_norm,
        final_l2_error: e.final_l2,
        eta_s: out.estimate.spatial_sq.sqrt(),
        eta_t: out.estimate.temporal_sq.sqrt(),
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

/// Simultaneous uniform refinement: level `l` halves `h` `l` times and uses
/// `tau0 / 2^l`.
pub fn converge(cfg: &RunConfig) -> Result<ConvergenceTable> {
    let mut setup = cfg.setup()?;
    setup.options = setup.options.uniform();
    if !setup.problem.has_exact() {
        return Err(Error::MissingExactSolution(setup.problem.name.clone()));
    }
    let base = setup.initial_mesh()?;
    let mut table = ConvergenceTable::new("level");
    for level in 0..cfg.converge.levels {
        let start = Instant::now();
        let mesh = base.refine_uniform(2 * level)?;
        let h = mesh.max_diameter();
        let mut o = setup.options.clone();
        o.tau0 = setup.options.tau0 / 2f64.powi(level as i32);
        let out = adaptive_run(&setup.problem, mesh, o.tau0, &o, &mut |_| Ok(()))?;
        table.rows.push(table_row(level as f64, h, o.tau0, &out, start)?);
    }
    Ok(table)
}

/// Tolerance sweep. Spatial sweeps keep `tau0` fixed and set
/// `stol_minus = stol_ratio * stol_plus`; temporal sweeps fix a uniformly
/// refined mesh.
pub fn estimate(cfg: &RunConfig) -> Result<ConvergenceTable> {
    let setup = cfg.setup()?;
    if !setup.problem.has_exact() {
        return Err(Error::MissingExactSolution(setup.problem.name.clone()));
    }
    let sec = &cfg.estimate;
    let base = setup.initial_mesh()?;
    let mut table = ConvergenceTable::new(match sec.kind {
        SweepKind::Spatial => "stol_plus",
        SweepKind::Temporal => "ttol",
    });
    for &value in &sec.values {
        let start = Instant::now();
        let mut o = setup.options.clone();
        let (mesh, tau) = match sec.kind {
            SweepKind::Spatial => {
                o.adapt_time = false;
                o.adapt_space = true;
                o.tolerances.stol_plus = value;
                o.tolerances.stol_minus = sec.stol_ratio * value;
                o.tolerances.validate()?;
                let (m, _, _) = if cfg.prepare_mesh {
                    prepare_initial_mesh(&setup.problem, base.clone(), &o)?
                } else {
                    (base.clone(), o.tau0, false)
                };
                (m, o.tau0)
            }
            SweepKind::Temporal => {
                o.adapt_time = true;
                o.adapt_space = false;
                o.tolerances.ttol = value;
                o.tolerances.validate()?;
                (base.refine_uniform(2 * sec.refinements)?, o.tau0)
            }
        };
        let h = mesh.max_diameter();
        let out = adaptive_run(&setup.problem, mesh, tau, &o, &mut |_| Ok(()))?;
        table.rows.push(table_row(value, h, tau, &out, start)?);
    }
    Ok(table)
}

pub struct DarcyReport {
    pub inflow: f64,
    pub outflow: f64,
    /// `sum_K |int_dK v.n| / inflow`.
    pub relative_imbalance: f64,
    pub speed_contrast: f64,
    pub cells: usize,
}

pub fn darcy_report(d: &DarcySolution) -> DarcyReport {
    let (inflow, outflow) = d.boundary_fluxes();
    let total: f64 = d.element_flux_balance().iter().map(|b| b.abs()).sum();
    DarcyReport {
        inflow,
        outflow,
        relative_imbalance: total / inflow.abs().max(f64::MIN_POSITIVE),
        speed_contrast: d.speed_contrast(),
        cells: d.mesh().num_cells(),
    }
}

/// Pressure and velocity of the porous-medium problem, written to
/// `darcy.vtk` under `dir`.
pub fn darcy(cfg: &RunConfig, dir: &Path) -> Result<DarcyReport> {
    let cfg = RunConfig { problem: "ex4".into(), ..cfg.clone() };
    let (_, d) = cfg.problem()?;
    let d = d.expect("ex4 carries a velocity solve");
    create_dir(dir)?;
    let mesh = d.mesh();
    let velocity: Vec<_> = mesh.cells().iter().map(|c| d.velocity_at(c.centroid())).collect();
    let f = VtkFields::new()
        .solution("pressure", &d.pressure)
        .cell("mobility", d.mobility.clone())
        .cell("flux_balance", d.element_flux_balance())
        .cell_vector("velocity", velocity);
    write_vtk_file(&dir.join("darcy.vtk"), mesh, "darcy pressure and velocity", &f)?;
    Ok(darcy_report(&d))
}
