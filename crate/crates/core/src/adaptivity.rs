//! Time-space adaptive driver: solve, halve the step until the temporal
//! indicator passes, refine and coarsen by the spatial indicator, re-solve on
//! the new mesh and advance.

use crate::assembly::{Assembler, BlockMatrix, BlockPattern, Penalty};
use crate::dg::space::{DGFunction, DGSpace};
use crate::error::{Error, Result};
use crate::estimators::{
    elliptic_source, initial_elliptic_source, initial_spatial_estimate, jump_estimate_sq, spatial_step_estimate,
    temporal_step_indicator, ErrorAccumulator, RunAccumulator, RunEstimate, StepEstimate, StepInput, StepTerms,
    Weights,
};
use crate::mesh::Mesh;
use crate::problems::Problem;
use crate::solver::{backward_euler_step, LinearSolver, NewtonSettings};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub ttol: f64,
    pub stol_plus: f64,
    pub stol_minus: f64,
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        if !(self.ttol > 0.0)
            || !(self.stol_plus > 0.0)
            || !(self.stol_minus >= 0.0)
            || self.stol_minus >= self.stol_plus
        {
            return Err(Error::Config(format!(
                "tolerances need ttol > 0, stol_plus > 0 and 0 <= stol_minus < stol_plus (got {}, {}, {})",
                self.ttol, self.stol_plus, self.stol_minus
            )));
        }
        Ok(())
    }
}

/// Refines elements above `stol_plus` and coarsens those below
/// `stol_minus`; refinement wins.
pub fn mark(values: &[f64], tol: &Tolerances) -> (Vec<usize>, Vec<usize>) {
    let refine: Vec<usize> = (0..values.len()).filter(|&i| values[i] > tol.stol_plus).collect();
    let coarsen = (0..values.len()).filter(|&i| values[i] < tol.stol_minus && values[i] <= tol.stol_plus).collect();
    (refine, coarsen)
}

/// Marking for systems: refine where any component asks for it, coarsen
/// where every component allows it.
pub fn mark_coupled(values: &[Vec<f64>], tol: &Tolerances) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = values.first().map_or(0, |v| v.len());
    if values.iter().any(|v| v.len() != n) {
        return Err(Error::InvalidArgument("component indicators live on different meshes".into()));
    }
    let refine: Vec<usize> = (0..n).filter(|&i| values.iter().any(|v| v[i] > tol.stol_plus)).collect();
    let coarsen =
        (0..n).filter(|&i| values.iter().all(|v| v[i] < tol.stol_minus) && refine.binary_search(&i).is_err()).collect();
    Ok((refine, coarsen))
}

#[derive(Clone, Debug)]
pub struct AdaptiveOptions {
    pub tolerances: Tolerances,
    pub degree: usize,
    pub tau0: f64,
    pub final_time: f64,
    pub newton: NewtonSettings,
    pub adapt_time: bool,
    pub adapt_space: bool,
    /// Elements at this refinement level are not refined further.
    pub max_level: u32,
    /// Track errors against the exact solution when one is available.
    pub track_errors: bool,
    pub penalty: Option<Penalty>,
}

impl AdaptiveOptions {
    pub fn from_problem(problem: &Problem) -> Self {
        let d = problem.defaults;
        AdaptiveOptions {
            tolerances: Tolerances { ttol: d.ttol, stol_plus: d.stol_plus, stol_minus: d.stol_minus },
            degree: d.degree,
            tau0: d.tau0,
            final_time: problem.final_time,
            newton: NewtonSettings::default(),
            adapt_time: true,
            adapt_space: true,
            max_level: d.max_level,
            track_errors: problem.has_exact(),
            penalty: None,
        }
    }

    /// Fixed mesh and fixed step.
    pub fn uniform(mut self) -> Self {
        self.adapt_time = false;
        self.adapt_space = false;
        self
    }

    fn penalty(&self) -> Penalty {
        self.penalty.unwrap_or_else(|| Penalty::for_degree(self.degree.max(1)))
    }

    pub fn tau_min(&self) -> f64 {
        self.tau0 * 2f64.powi(-20)
    }
}

/// One accepted step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub tau: f64,
    pub eta_s1: f64,
    pub eta_s2: f64,
    pub eta_s3: f64,
    pub eta_s4: f64,
    pub eta_t_tilde: f64,
    /// Degrees of freedom of the mesh the step ends on.
    pub dofs: usize,
    pub newton_iters: usize,
    pub union_dofs: usize,
    pub cells: usize,
    pub refined: usize,
    pub coarsened: usize,
    pub halvings: usize,
    /// `||u(t) - u_h(t)||`, NaN without exact solution.
    pub l2_error: f64,
}

#[derive(Clone, Debug, Default)]
pub struct AdaptiveTrace {
    pub records: Vec<StepRecord>,
    pub final_time: f64,
}

impl AdaptiveTrace {
    pub fn weighted_dofs(&self) -> Result<f64> {
        weighted_dofs(&self.records, self.final_time)
    }

    pub fn total_time(&self) -> f64 {
        self.records.iter().map(|r| r.tau).sum()
    }
}

/// `(1/T) sum_k tau_k lambda_k` with `lambda_k` the union-mesh DoFs.
pub fn weighted_dofs(records: &[StepRecord], final_time: f64) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("empty trace".into()));
    }
    Ok(records.iter().map(|r| r.tau * r.union_dofs as f64).sum::<f64>() / final_time)
}

/// Everything the observer sees after an accepted step.
pub struct StepView<'a> {
    pub record: &'a StepRecord,
    pub solution: &'a [DGFunction],
    /// `eta_{S1,k}^2` per element of the final mesh, summed over components.
    pub s1_elements: &'a [f64],
}

#[derive(Clone, Debug)]
pub struct ErrorSummary {
    pub star_norm: f64,
    pub final_l2: f64,
    pub max_l2: f64,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub trace: AdaptiveTrace,
    pub solution: Vec<DGFunction>,
    pub estimate: RunEstimate,
    pub errors: Option<ErrorSummary>,
    pub initial_mesh: Arc<Mesh>,
}

/// Operators cached on one mesh.
struct MeshState {
    space: DGSpace,
    pattern: Arc<BlockPattern>,
    mass: BlockMatrix,
    stiffness: Option<(f64, BlockMatrix)>,
    solver: LinearSolver,
}

impl MeshState {
    fn new(space: DGSpace, problem: &Problem, penalty: Penalty) -> Result<Self> {
        let asm = Assembler::new(&space, problem)?.with_penalty(penalty);
        let pattern = asm.pattern().clone();
        let mass = asm.mass();
        Ok(MeshState { space, pattern, mass, stiffness: None, solver: LinearSolver::new() })
    }

    fn assembler<'a>(&'a self, problem: &'a Problem, penalty: Penalty) -> Result<Assembler<'a>> {
        Ok(Assembler::new(&self.space, problem)?.with_penalty(penalty).with_pattern(self.pattern.clone()))
    }

    /// Stiffness at time `t`, reassembled only for time-dependent velocity.
    fn ensure_stiffness(&mut self, problem: &Problem, penalty: Penalty, t: f64) -> Result<()> {
        let fresh = match &self.stiffness {
            Some((t0, _)) => !problem.static_velocity && *t0 != t,
            None => true,
        };
        if fresh {
            let s = self.assembler(problem, penalty)?.stiffness(t);
            self.stiffness = Some((t, s));
        }
        Ok(())
    }

    fn split(&self, stacked: &[f64]) -> Vec<DGFunction> {
        let d = self.space.dof();
        stacked.chunks(d).map(|c| DGFunction { space: self.space.clone(), coeffs: c.to_vec() }).collect()
    }

    /// Backward Euler step from `w` (on this mesh) to time `t`.
    fn solve(&mut self, problem: &Problem, opts: &AdaptiveOptions, w: &[f64], t: f64, tau: f64) -> Result<Solved> {
        let penalty = opts.penalty();
        self.ensure_stiffness(problem, penalty, t)?;
        let (load, if_k) = {
            let asm = self.assembler(problem, penalty)?;
            (asm.load(t), asm.source_load(t))
        };
        let asm = Assembler::new(&self.space, problem)?.with_penalty(penalty).with_pattern(self.pattern.clone());
        let stiff = &self.stiffness.as_ref().unwrap().1;
        let r = backward_euler_step(&asm, &self.mass, stiff, &load, w, tau, &opts.newton, &mut self.solver)?;
        Ok(Solved { u: self.split(&r.u), f_proj: self.split(&if_k), iterations: r.iterations })
    }
}

struct Solved {
    u: Vec<DGFunction>,
    f_proj: Vec<DGFunction>,
    iterations: usize,
}

pub fn weights_for(problem: &Problem, penalty: Penalty) -> Vec<Weights> {
    problem.components.iter().map(|c| Weights::new(c.diffusion_min, problem.kappa, penalty)).collect()
}

fn stack(u: &[DGFunction]) -> Vec<f64> {
    u.iter().flat_map(|f| f.coeffs.iter().copied()).collect()
}

fn project_initial(space: &DGSpace, problem: &Problem) -> Vec<DGFunction> {
    problem.components.iter().map(|c| space.project(|x| (c.initial)(x))).collect()
}

fn transfer(space: &DGSpace, u: &[DGFunction]) -> Result<Vec<DGFunction>> {
    u.iter().map(|f| space.project_function(f)).collect()
}

/// Applies coarsening then refinement, respecting the level cap; returns the
/// new mesh and the numbers of refined and removed elements.
fn adapt_mesh(mesh: &Mesh, refine: &[usize], coarsen: &[usize], max_level: u32) -> Result<(Mesh, usize, usize)> {
    let refine: Vec<usize> = refine.iter().copied().filter(|&i| mesh.cell(i).level < max_level).collect();
    let nodes: Vec<usize> = refine.iter().map(|&i| mesh.cell(i).node).collect();
    let coarse = mesh.coarsen(coarsen);
    let removed = mesh.num_cells() - coarse.num_cells().min(mesh.num_cells());
    let removed = if coarse.num_cells() < mesh.num_cells() { 2 * removed } else { 0 };
    let idx: Vec<usize> = nodes.iter().filter_map(|&n| coarse.leaf_of_node(n)).collect();
    let fine = coarse.refine(&idx)?;
    Ok((fine, idx.len(), removed))
}

/// Repeats the first step from the initial data, refining by `stol_plus`
/// and halving `tau` by `ttol`, until both pass or 30 rounds are used.
/// Returns the mesh, the step size and whether the cap was reached.
pub fn prepare_initial_mesh(problem: &Problem, coarse: Mesh, opts: &AdaptiveOptions) -> Result<(Mesh, f64, bool)> {
    let penalty = opts.penalty();
    let weights = weights_for(problem, penalty);
    let mut mesh = coarse;
    let mut tau = opts.tau0.min(opts.final_time);
    for _ in 0..30 {
        let space = DGSpace::new(Arc::new(mesh.clone()), opts.degree)?;
        let mut state = MeshState::new(space.clone(), problem, penalty)?;
        let u0 = project_initial(&space, problem);
        let a0 = {
            let asm = state.assembler(problem, penalty)?;
            state.split(&initial_elliptic_source(&asm, &stack(&u0), 0.0)?)
        };
        let solved = match state.solve(problem, opts, &stack(&u0), tau, tau) {
            Ok(s) => s,
            Err(e) if opts.adapt_time && halvable(&e) && tau / 2.0 >= opts.tau_min() => {
                tau /= 2.0;
                continue;
            }
            Err(e) => return Err(e),
        };
        let source: Vec<DGFunction> =
            (0..u0.len()).map(|i| elliptic_source(&u0[i], &solved.u[i], &solved.f_proj[i], tau)).collect();
        let mut changed = false;
        if opts.adapt_time {
            let t = temporal_step_indicator(problem, &weights, &u0, &solved.u, &a0, &source, 0.0, tau)?;
            if t.iter().any(|c| c.tilde_sq > opts.tolerances.ttol) && tau / 2.0 >= opts.tau_min() {
                tau /= 2.0;
                changed = true;
            }
        }
        if opts.adapt_space {
            let inp = StepInput {
                problem,
                weights: &weights,
                t_prev: 0.0,
                t: tau,
                u_prev: &u0,
                source_prev: &a0,
                u_prev_proj: &u0,
                u: &solved.u,
                f_proj: &solved.f_proj,
            };
            let est = spatial_step_estimate(&inp)?;
            let values: Vec<Vec<f64>> = est.components.iter().map(|c| c.s1_elements.clone()).collect();
            let no_coarsen = Tolerances { stol_minus: 0.0, ..opts.tolerances };
            let (refine, _) = mark_coupled(&values, &no_coarsen)?;
            let (next, n, _) = adapt_mesh(&mesh, &refine, &[], opts.max_level)?;
            if n > 0 {
                mesh = next;
                changed = true;
            }
        }
        if !changed {
            return Ok((mesh, tau, false));
        }
    }
    Ok((mesh, tau, true))
}

/// Nonlinear failures that a shorter step may cure.
fn halvable(e: &Error) -> bool {
    matches!(e, Error::NewtonDivergence { .. } | Error::Reaction { .. })
}

fn record_from(step: usize, t: f64, tau: f64, est: &StepEstimate, dofs: usize, cells: usize) -> StepRecord {
    StepRecord {
        step,
        t,
        tau,
        eta_s1: est.s1_sq().sqrt(),
        eta_s2: est.s2_sq().sqrt(),
        eta_s3: est.s3_sq().sqrt(),
        eta_s4: est.s4_sq().sqrt(),
        eta_t_tilde: est.tilde_t_sq().sqrt(),
        dofs,
        newton_iters: 0,
        union_dofs: est.union_dofs,
        cells,
        refined: 0,
        coarsened: 0,
        halvings: 0,
        l2_error: f64::NAN,
    }
}

/// Runs the adaptive algorithm from `mesh` with step `tau` (normally the
/// output of [`prepare_initial_mesh`]). `observer` sees every accepted step.
pub fn adaptive_run(
    problem: &Problem,
    mesh: Mesh,
    tau: f64,
    opts: &AdaptiveOptions,
    observer: &mut dyn FnMut(&StepView) -> Result<()>,
) -> Result<RunOutcome> {
    opts.tolerances.validate()?;
    if !(tau > 0.0) || !(opts.final_time > 0.0) {
        return Err(Error::Config("time step and final time must be positive".into()));
    }
    let penalty = opts.penalty();
    let weights = weights_for(problem, penalty);
    let t_end = opts.final_time;
    let initial_mesh = Arc::new(mesh);
    let mut state = MeshState::new(DGSpace::new(initial_mesh.clone(), opts.degree)?, problem, penalty)?;
    let mut u_prev = project_initial(&state.space, problem);
    let mut a_prev = {
        let asm = state.assembler(problem, penalty)?;
        state.split(&initial_elliptic_source(&asm, &stack(&u_prev), 0.0)?)
    };
    let (_, s1_0) = initial_spatial_estimate(problem, &weights, &u_prev, &a_prev, 0.0)?;
    let s3_0 = jump_estimate_sq(problem, &u_prev, 0.0)?;
    let track = opts.track_errors && problem.has_exact();
    let mut errors = ErrorAccumulator::new();
    let e0_sq = if track { errors.add_endpoint(problem, &u_prev, 0.0)?.powi(2) } else { 0.0 };
    let rho_t = weights.iter().map(|w| w.rho_t()).fold(f64::INFINITY, f64::min);
    let mut acc = RunAccumulator::new(rho_t, e0_sq, s1_0, s3_0);
    let mut trace = AdaptiveTrace { records: Vec::new(), final_time: t_end };
    let mut t = 0.0;
    let mut step = 0;
    while t < t_end * (1.0 - 1e-12) {
        step += 1;
        let mut tau_k = tau.min(t_end - t);
        if t + tau_k > t_end * (1.0 - 1e-12) {
            tau_k = t_end - t;
        }
        let mut halvings = 0;
        let w = stack(&u_prev);
        // Temporal loop on the incoming mesh.
        let mut solved = loop {
            let s = match state.solve(problem, opts, &w, t + tau_k, tau_k) {
                Ok(s) => s,
                Err(e) if opts.adapt_time && halvable(&e) => {
                    tau_k *= 0.5;
                    halvings += 1;
                    if tau_k < opts.tau_min() {
                        return Err(e);
                    }
                    continue;
                }
                Err(e) => return Err(e),
            };
            if !opts.adapt_time {
                break s;
            }
            let source: Vec<DGFunction> = (0..w.len() / state.space.dof())
                .map(|i| elliptic_source(&u_prev[i], &s.u[i], &s.f_proj[i], tau_k))
                .collect();
            let ind = temporal_step_indicator(problem, &weights, &u_prev, &s.u, &a_prev, &source, t, t + tau_k)?;
            if ind.iter().all(|c| c.tilde_sq <= opts.tolerances.ttol) {
                break s;
            }
            tau_k *= 0.5;
            halvings += 1;
            if tau_k < opts.tau_min() {
                return Err(Error::TimeStepUnderflow { tau: tau_k, tau_min: opts.tau_min() });
            }
        };
        let t_new = t + tau_k;
        let mut iterations = solved.iterations;
        let same_input = |u_prev: &'_ [DGFunction], a_prev: &'_ [DGFunction], s: &'_ Solved, proj: &'_ [DGFunction]| {
            spatial_step_estimate(&StepInput {
                problem,
                weights: &weights,
                t_prev: t,
                t: t_new,
                u_prev,
                source_prev: a_prev,
                u_prev_proj: proj,
                u: &s.u,
                f_proj: &s.f_proj,
            })
        };
        let mut est = same_input(&u_prev, &a_prev, &solved, &u_prev)?;
        let (mut refined, mut coarsened) = (0, 0);
        if opts.adapt_space {
            let values: Vec<Vec<f64>> = est.components.iter().map(|c| c.s1_elements.clone()).collect();
            let (refine, coarsen) = mark_coupled(&values, &opts.tolerances)?;
            debug_assert!(coarsen.iter().all(|c| refine.binary_search(c).is_err()));
            if !refine.is_empty() || !coarsen.is_empty() {
                let (mesh, nr, nc) = adapt_mesh(state.space.mesh(), &refine, &coarsen, opts.max_level)?;
                if nr > 0 || nc > 0 {
                    refined = nr;
                    coarsened = nc;
                    let space = state.space.on_mesh(Arc::new(mesh));
                    state = MeshState::new(space, problem, penalty)?;
                    let proj = transfer(&state.space, &u_prev)?;
                    solved = state.solve(problem, opts, &stack(&proj), t_new, tau_k)?;
                    iterations += solved.iterations;
                    est = same_input(&u_prev, &a_prev, &solved, &proj)?;
                }
            }
        }
        let mut rec = record_from(
            step,
            t_new,
            tau_k,
            &est,
            state.space.dof() * problem.num_components(),
            state.space.mesh().num_cells(),
        );
        rec.newton_iters = iterations;
        rec.refined = refined;
        rec.coarsened = coarsened;
        rec.halvings = halvings;
        acc.add(&StepTerms {
            tau: tau_k,
            s1_sq: est.s1_sq(),
            s2_sq: est.s2_sq(),
            s3_sq: est.s3_sq(),
            s4_sq: est.s4_sq(),
            t1_sq_int: est.components.iter().map(|c| c.temporal.t1_sq_int).sum(),
            t2_int: est.components.iter().map(|c| c.temporal.t2_int).sum(),
            t2_sq_int: est.components.iter().map(|c| c.temporal.t2_sq_int).sum(),
            tilde_t_sq: est.tilde_t_sq(),
        });
        if track {
            errors.add_interval(problem, &u_prev, &solved.u, t, t_new, penalty)?;
            rec.l2_error = errors.add_endpoint(problem, &solved.u, t_new)?;
        }
        let mut s1_elements = vec![0.0; state.space.mesh().num_cells()];
        for c in &est.components {
            for (a, b) in s1_elements.iter_mut().zip(&c.s1_elements) {
                *a += b;
            }
        }
        observer(&StepView { record: &rec, solution: &solved.u, s1_elements: &s1_elements })?;
        trace.records.push(rec);
        u_prev = solved.u;
        a_prev = est.source;
        t = t_new;
    }
    let errors = track.then(|| ErrorSummary {
        star_norm: errors.star_norm(),
        final_l2: errors.final_l2,
        max_l2: errors.max_l2_sq.sqrt(),
    });
    Ok(RunOutcome { trace, solution: u_prev, estimate: acc.estimate(), errors, initial_mesh })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances { ttol: 1.0, stol_plus: 3e-4, stol_minus: 3e-7 }
    }

    #[test]
    fn threshold_marking() {
        assert_eq!(mark(&[1e-5, 1e-6], &tol()), (vec![], vec![]));
        assert_eq!(mark(&[1e-2, 1e-5, 1e-9], &tol()), (vec![0], vec![2]));
        let t0 = Tolerances { stol_minus: 0.0, ..tol() };
        assert!(mark(&[0.0, 1e-20], &t0).1.is_empty());
    }

    #[test]
    fn coupled_marking_prefers_refinement() {
        let v = vec![vec![1e-2, 1e-9, 1e-9], vec![1e-9, 1e-9, 1e-5]];
        let (r, c) = mark_coupled(&v, &tol()).unwrap();
        assert_eq!(r, vec![0]);
        assert_eq!(c, vec![1]);
        let quiet = vec![vec![1e-5; 3], vec![1e-5; 3]];
        assert_eq!(mark_coupled(&quiet, &tol()).unwrap(), (vec![], vec![]));
        assert!(mark_coupled(&[vec![0.0; 2], vec![0.0; 3]], &tol()).is_err());
    }

    #[test]
    fn weighted_dof_average() {
        let r = |tau: f64, d: usize| StepRecord {
            step: 0,
            t: 0.0,
            tau,
            eta_s1: 0.0,
            eta_s2: 0.0,
            eta_s3: 0.0,
            eta_s4: 0.0,
            eta_t_tilde: 0.0,
            dofs: d,
            newton_iters: 0,
            union_dofs: d,
            cells: 0,
            refined: 0,
            coarsened: 0,
            halvings: 0,
            l2_error: f64::NAN,
        };
        assert_eq!(weighted_dofs(&[r(0.5, 100), r(0.5, 300)], 1.0).unwrap(), 200.0);
        assert_eq!(weighted_dofs(&[r(0.25, 7), r(0.75, 7)], 1.0).unwrap(), 7.0);
        assert!(weighted_dofs(&[], 1.0).is_err());
    }

    #[test]
    fn invalid_tolerances_are_rejected() {
        assert!(Tolerances { ttol: 1.0, stol_plus: 1e-3, stol_minus: 1e-3 }.validate().is_err());
        assert!(Tolerances { ttol: 0.0, stol_plus: 1e-3, stol_minus: 0.0 }.validate().is_err());
        assert!(tol().validate().is_ok());
    }
}
