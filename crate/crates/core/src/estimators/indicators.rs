//! Residual indicators of the stationary problem and the spatial and
//! temporal estimators of one backward Euler step.

use super::{estimator_tables, sample, sample_div_flux, Weights};
use crate::assembly::{max_eigenvalue, Assembler};
use crate::dg::quadrature::time_gauss2;
use crate::dg::space::{DGFunction, DGSpace, Tables};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::{EdgeKind, Mesh};
use crate::problems::Problem;
use std::sync::Arc;

/// Squared per-element contributions; interior edge terms are split evenly
/// between the two neighbours.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ElementIndicators {
    pub residual_sq: Vec<f64>,
    pub flux_sq: Vec<f64>,
    pub jump_sq: Vec<f64>,
}

impl ElementIndicators {
    fn zeros(n: usize) -> Self {
        ElementIndicators { residual_sq: vec![0.0; n], flux_sq: vec![0.0; n], jump_sq: vec![0.0; n] }
    }

    pub fn element_sq(&self) -> Vec<f64> {
        (0..self.residual_sq.len()).map(|i| self.residual_sq[i] + self.flux_sq[i] + self.jump_sq[i]).collect()
    }

    pub fn total_sq(&self) -> f64 {
        self.residual_sq.iter().chain(&self.flux_sq).chain(&self.jump_sq).sum()
    }

    /// Sums element values onto a coarser mesh through `parent`.
    fn restrict(&self, parent: &[usize], n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (i, v) in self.element_sq().into_iter().enumerate() {
            out[parent[i]] += v;
        }
        out
    }
}

/// One-sided data needed for residual indicators.
struct ResidualInput<'a> {
    problem: &'a Problem,
    comp: usize,
    weights: &'a Weights,
    /// All components on one space.
    u: &'a [DGFunction],
    /// Volume source on the same space.
    source: &'a DGFunction,
    velocity: &'a dyn Fn(usize, Point) -> Point,
    t: f64,
}

fn states_at(u: &[DGFunction], element: usize, table: &crate::dg::basis::BasisTable) -> Vec<Vec<f64>> {
    let mut g = Vec::new();
    u.iter()
        .map(|f| {
            let mut v = Vec::new();
            sample(f, element, table, &mut v, &mut g);
            v
        })
        .collect()
}

fn residual_indicators(inp: &ResidualInput, t: &Tables) -> Result<ElementIndicators> {
    let u = &inp.u[inp.comp];
    let mesh = u.space.mesh();
    let comp = &inp.problem.components[inp.comp];
    let w = inp.weights;
    let ncomp = inp.u.len();
    let mut out = ElementIndicators::zeros(mesh.num_cells());
    let (mut val, mut grad, mut lap, mut src, mut g2) = (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut state = vec![0.0; ncomp];
    let mut r = vec![0.0; ncomp];
    let mut d = vec![0.0; ncomp * ncomp];
    for (ci, c) in mesh.cells().iter().enumerate() {
        sample(u, ci, &t.tri, &mut val, &mut grad);
        sample(inp.source, ci, &t.tri, &mut src, &mut g2);
        let eps = (comp.diffusion)(c.centroid());
        sample_div_flux(u, ci, &t.tri, &eps, &mut lap);
        let others = if ncomp > 1 { states_at(inp.u, ci, &t.tri) } else { Vec::new() };
        let mut s = 0.0;
        for q in 0..t.tri_rule.len() {
            let x = c.map(t.tri_rule.points[q]);
            for (j, st) in state.iter_mut().enumerate() {
                *st = if ncomp > 1 { others[j][q] } else { val[q] };
            }
            (inp.problem.reaction)(&state, &mut r, &mut d).map_err(|reason| Error::Reaction { element: ci, reason })?;
            let b = (inp.velocity)(ci, x);
            let res = src[q] + lap[q] - (b[0] * grad[q][0] + b[1] * grad[q][1]) - r[inp.comp];
            s += t.tri_rule.weights[q] * 2.0 * c.area * res * res;
        }
        out.residual_sq[ci] = w.rho_k(c.diameter).powi(2) * s;
    }
    let (mut vl, mut gl, mut vr, mut gr) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for e in mesh.edges() {
        if e.kind == EdgeKind::Neumann {
            continue;
        }
        sample(u, e.left, t.edge_table(e.left_local, e.left_flip), &mut vl, &mut gl);
        if let Some(ri) = e.right {
            sample(u, ri, t.edge_table(e.right_local, e.right_flip), &mut vr, &mut gr);
        }
        let sigma = w.penalty.on(e.kind);
        let (mut flux, mut jump) = (0.0, 0.0);
        for q in 0..t.edge_rule.len() {
            let x = e.point(t.edge_rule.points[q][0]);
            let wq = t.edge_rule.weights[q] * e.length;
            let eps = (comp.diffusion)(x);
            let fl = |g: [f64; 2]| {
                (eps[0][0] * g[0] + eps[0][1] * g[1]) * e.normal[0]
                    + (eps[1][0] * g[0] + eps[1][1] * g[1]) * e.normal[1]
            };
            let j = if e.right.is_some() {
                flux += wq * (fl(gl[q]) - fl(gr[q])).powi(2);
                vl[q] - vr[q]
            } else {
                vl[q] - (comp.dirichlet)(x, inp.t)
            };
            jump += wq * w.jump_weight(max_eigenvalue(&eps), sigma, e.length) * j * j;
        }
        let flux = flux * e.length / w.eps;
        match e.right {
            Some(ri) => {
                for i in [e.left, ri] {
                    out.flux_sq[i] += 0.5 * flux;
                    out.jump_sq[i] += 0.5 * jump;
                }
            }
            None => out.jump_sq[e.left] += jump,
        }
    }
    Ok(out)
}

/// Indicators `eta_K` and data terms `theta_K` of the stationary problem.
#[derive(Clone, Debug, PartialEq)]
pub struct StationaryReport {
    pub indicators: ElementIndicators,
    pub theta_sq: Vec<f64>,
    pub eta: f64,
    pub theta: f64,
}

impl StationaryReport {
    pub fn eta_k(&self) -> Vec<f64> {
        self.indicators.element_sq().into_iter().map(f64::sqrt).collect()
    }
}

/// Stationary indicators of component `comp` with the data `f(., t)` and
/// `beta(., t)` replaced by their degree-`k` projections.
pub fn stationary_indicator(
    problem: &Problem,
    comp: usize,
    u: &[DGFunction],
    t: f64,
    weights: &Weights,
) -> Result<StationaryReport> {
    let space = &u[comp].space;
    let c = &problem.components[comp];
    let fh = space.project(|x| (c.source)(x, t));
    let bx = space.project(|x| (c.velocity)(x, t)[0]);
    let by = space.project(|x| (c.velocity)(x, t)[1]);
    let tables = estimator_tables(&u[comp])?;
    let velocity = |ci: usize, x: Point| {
        let r = space.mesh().cell(ci).inverse_map(x);
        [bx.eval_in(ci, r), by.eval_in(ci, r)]
    };
    let inp = ResidualInput { problem, comp, weights, u, source: &fh, velocity: &velocity, t };
    let indicators = residual_indicators(&inp, &tables)?;
    let mesh = space.mesh();
    let (mut fv, mut g, mut uv, mut ug, mut bxv, mut byv) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut theta_sq = vec![0.0; mesh.num_cells()];
    for (ci, cell) in mesh.cells().iter().enumerate() {
        sample(&fh, ci, &tables.tri, &mut fv, &mut g);
        sample(&u[comp], ci, &tables.tri, &mut uv, &mut ug);
        sample(&bx, ci, &tables.tri, &mut bxv, &mut g);
        sample(&by, ci, &tables.tri, &mut byv, &mut g);
        let mut s = 0.0;
        for q in 0..tables.tri_rule.len() {
            let x = cell.map(tables.tri_rule.points[q]);
            let b = (c.velocity)(x, t);
            let df = (c.source)(x, t) - fv[q];
            let db = (b[0] - bxv[q]) * ug[q][0] + (b[1] - byv[q]) * ug[q][1];
            s += tables.tri_rule.weights[q] * 2.0 * cell.area * (df * df + db * db);
        }
        theta_sq[ci] = weights.rho_k(cell.diameter).powi(2) * s;
    }
    let eta = indicators.total_sq().sqrt();
    let theta = theta_sq.iter().sum::<f64>().sqrt();
    Ok(StationaryReport { indicators, theta_sq, eta, theta })
}

/// `A^k = I f^k - (u^k - I u^{k-1}) / tau` on the current space: `f_proj` is
/// `I f^k` and `u_prev_proj` is `I u^{k-1}`.
pub fn elliptic_source(u_prev_proj: &DGFunction, u: &DGFunction, f_proj: &DGFunction, tau: f64) -> DGFunction {
    let coeffs = (0..u.coeffs.len()).map(|i| f_proj.coeffs[i] - (u.coeffs[i] - u_prev_proj.coeffs[i]) / tau).collect();
    DGFunction { space: u.space.clone(), coeffs }
}

/// `A^0` from the stationary relation `a_h + K_h + b_h = (A^0, v)` at the
/// initial time, for every component.
pub fn initial_elliptic_source(asm: &Assembler, u0: &[f64], t0: f64) -> Result<Vec<f64>> {
    let su = asm.stiffness(t0).matvec(u0);
    let b = asm.reaction_vector(u0)?;
    let g = asm.boundary_load(t0);
    // The mass matrix is the identity for the orthonormal basis.
    Ok((0..u0.len()).map(|i| su[i] + b[i] - g[i]).collect())
}

/// Estimators of one component for one step.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentStep {
    /// `eta_{S1,k}^2` restricted to the leaves of the current mesh.
    pub s1_elements: Vec<f64>,
    pub s1_sq: f64,
    pub s2_sq: f64,
    pub s3_sq: f64,
    pub s4_sq: f64,
    pub temporal: TemporalIndicator,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TemporalIndicator {
    /// `int eta_T1^2 dt`.
    pub t1_sq_int: f64,
    /// `int eta_T2^2 dt`.
    pub t2_sq_int: f64,
    /// `int eta_T2 dt`.
    pub t2_int: f64,
    /// Modified indicator `tilde eta_T^2`.
    pub tilde_sq: f64,
}

#[derive(Clone, Debug)]
pub struct StepEstimate {
    pub components: Vec<ComponentStep>,
    /// `A^k` on the current space, per component.
    pub source: Vec<DGFunction>,
    /// Degrees of freedom of the union mesh, all components.
    pub union_dofs: usize,
}

impl StepEstimate {
    pub fn s1_sq(&self) -> f64 {
        self.components.iter().map(|c| c.s1_sq).sum()
    }
    pub fn s2_sq(&self) -> f64 {
        self.components.iter().map(|c| c.s2_sq).sum()
    }
    pub fn s3_sq(&self) -> f64 {
        self.components.iter().map(|c| c.s3_sq).sum()
    }
    pub fn s4_sq(&self) -> f64 {
        self.components.iter().map(|c| c.s4_sq).sum()
    }
    pub fn tilde_t_sq(&self) -> f64 {
        self.components.iter().map(|c| c.temporal.tilde_sq).sum()
    }
    pub fn max_tilde_t_sq(&self) -> f64 {
        self.components.iter().map(|c| c.temporal.tilde_sq).fold(0.0, f64::max)
    }
}

/// Inputs of the step estimators. Functions marked "previous" live on the
/// previous mesh, the others on the current one.
pub struct StepInput<'a> {
    pub problem: &'a Problem,
    pub weights: &'a [Weights],
    pub t_prev: f64,
    pub t: f64,
    pub u_prev: &'a [DGFunction],
    pub source_prev: &'a [DGFunction],
    /// `I u^{k-1}` on the current space.
    pub u_prev_proj: &'a [DGFunction],
    pub u: &'a [DGFunction],
    /// `I f^k` on the current space.
    pub f_proj: &'a [DGFunction],
}

struct Union {
    space: DGSpace,
    to_current: Vec<usize>,
}

fn union_of(current: &DGSpace, previous: &Mesh) -> Result<Union> {
    let mesh = current.mesh().union(previous)?;
    let to_current = mesh.parents_in(current.mesh())?;
    Ok(Union { space: current.on_mesh(Arc::new(mesh)), to_current })
}

fn transfer(space: &DGSpace, u: &[DGFunction]) -> Result<Vec<DGFunction>> {
    u.iter().map(|f| space.project_function(f)).collect()
}

/// Spatial estimators `eta_{S1..S4,k}` and the temporal indicator of one
/// step, evaluated on the union of the previous and current meshes.
pub fn spatial_step_estimate(inp: &StepInput) -> Result<StepEstimate> {
    let problem = inp.problem;
    let tau = inp.t - inp.t_prev;
    let current = &inp.u[0].space;
    let uni = union_of(current, inp.u_prev[0].space.mesh())?;
    let us = &uni.space;
    let source: Vec<DGFunction> = (0..problem.num_components())
        .map(|i| elliptic_source(&inp.u_prev_proj[i], &inp.u[i], &inp.f_proj[i], tau))
        .collect();
    let u_k = transfer(us, inp.u)?;
    let u_km1 = transfer(us, inp.u_prev)?;
    let w_k = transfer(us, inp.u_prev_proj)?;
    let a_k = transfer(us, &source)?;
    let a_km1 = transfer(us, inp.source_prev)?;
    let f_proj = transfer(us, inp.f_proj)?;
    let tables = estimator_tables(&u_k[0])?;
    let mesh = us.mesh();
    let mut components = Vec::with_capacity(problem.num_components());
    for i in 0..problem.num_components() {
        let c = &problem.components[i];
        let w = &inp.weights[i];
        let velocity = |ci: usize, x: Point| {
            let _ = ci;
            (c.velocity)(x, inp.t)
        };
        let rinp =
            ResidualInput { problem, comp: i, weights: w, u: &u_k, source: &a_k[i], velocity: &velocity, t: inp.t };
        let s1 = residual_indicators(&rinp, &tables)?;
        let s1_elements = s1.restrict(&uni.to_current, current.mesh().num_cells());
        let s1_sq = s1.total_sq();

        // S2: data oscillation of f^k and of the projection of u^{k-1}.
        let (mut fp, mut up, mut wp, mut g) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        let mut s2_sq = 0.0;
        for (ci, cell) in mesh.cells().iter().enumerate() {
            sample(&f_proj[i], ci, &tables.tri, &mut fp, &mut g);
            sample(&u_km1[i], ci, &tables.tri, &mut up, &mut g);
            sample(&w_k[i], ci, &tables.tri, &mut wp, &mut g);
            let mut s = 0.0;
            for q in 0..tables.tri_rule.len() {
                let x = cell.map(tables.tri_rule.points[q]);
                let v = (c.source)(x, inp.t) - fp[q] + (up[q] - wp[q]) / tau;
                s += tables.tri_rule.weights[q] * 2.0 * cell.area * v * v;
            }
            s2_sq += w.rho_k(cell.diameter).powi(2) * s;
        }

        // S3 and S4: h-weighted jumps of u^k and of its difference quotient.
        let (mut a, mut ga, mut b, mut gb, mut pa, mut pb) =
            (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
        let (mut s3_sq, mut s4_sq) = (0.0, 0.0);
        for e in mesh.edges().iter().filter(|e| e.kind != EdgeKind::Neumann) {
            let tl = tables.edge_table(e.left_local, e.left_flip);
            sample(&u_k[i], e.left, tl, &mut a, &mut ga);
            sample(&u_km1[i], e.left, tl, &mut pa, &mut ga);
            if let Some(r) = e.right {
                let tr = tables.edge_table(e.right_local, e.right_flip);
                sample(&u_k[i], r, tr, &mut b, &mut gb);
                sample(&u_km1[i], r, tr, &mut pb, &mut gb);
            }
            for q in 0..tables.edge_rule.len() {
                let x = e.point(tables.edge_rule.points[q][0]);
                let wq = tables.edge_rule.weights[q] * e.length * e.length;
                let (jk, jp) = if e.right.is_some() {
                    (a[q] - b[q], pa[q] - pb[q])
                } else {
                    (a[q] - (c.dirichlet)(x, inp.t), pa[q] - (c.dirichlet)(x, inp.t_prev))
                };
                s3_sq += wq * jk * jk;
                s4_sq += wq * ((jk - jp) / tau).powi(2);
            }
        }
        let temporal = temporal_on_union(problem, i, w, &u_km1, &u_k, &a_km1[i], &a_k[i], inp.t_prev, inp.t, &tables)?;
        components.push(ComponentStep { s1_elements, s1_sq, s2_sq, s3_sq, s4_sq, temporal });
    }
    Ok(StepEstimate { components, source, union_dofs: us.dof() * problem.num_components() })
}

/// `eta_{S1,0}` of the initial data with source `A^0`.
pub fn initial_spatial_estimate(
    problem: &Problem,
    weights: &[Weights],
    u0: &[DGFunction],
    a0: &[DGFunction],
    t0: f64,
) -> Result<(Vec<Vec<f64>>, f64)> {
    let tables = estimator_tables(&u0[0])?;
    let mut elems = Vec::new();
    let mut total = 0.0;
    for i in 0..problem.num_components() {
        let c = &problem.components[i];
        let velocity = |_: usize, x: Point| (c.velocity)(x, t0);
        let rinp =
            ResidualInput { problem, comp: i, weights: &weights[i], u: u0, source: &a0[i], velocity: &velocity, t: t0 };
        let s = residual_indicators(&rinp, &tables)?;
        total += s.total_sq();
        elems.push(s.element_sq());
    }
    Ok((elems, total))
}

/// `eta_{S3}^2` of a single time level: h-weighted jumps of `u` and the
/// Dirichlet mismatch.
pub fn jump_estimate_sq(problem: &Problem, u: &[DGFunction], t: f64) -> Result<f64> {
    let tables = estimator_tables(&u[0])?;
    let mesh = u[0].space.mesh();
    let (mut a, mut ga, mut b, mut gb) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut s = 0.0;
    for (i, c) in problem.components.iter().enumerate() {
        for e in mesh.edges().iter().filter(|e| e.kind != EdgeKind::Neumann) {
            sample(&u[i], e.left, tables.edge_table(e.left_local, e.left_flip), &mut a, &mut ga);
            if let Some(r) = e.right {
                sample(&u[i], r, tables.edge_table(e.right_local, e.right_flip), &mut b, &mut gb);
            }
            for q in 0..tables.edge_rule.len() {
                let x = e.point(tables.edge_rule.points[q][0]);
                let j = if e.right.is_some() { a[q] - b[q] } else { a[q] - (c.dirichlet)(x, t) };
                s += tables.edge_rule.weights[q] * e.length * e.length * j * j;
            }
        }
    }
    Ok(s)
}

#[allow(clippy::too_many_arguments)]
fn temporal_on_union(
    problem: &Problem,
    i: usize,
    w: &Weights,
    u_km1: &[DGFunction],
    u_k: &[DGFunction],
    a_km1: &DGFunction,
    a_k: &DGFunction,
    t0: f64,
    t1: f64,
    tables: &Tables,
) -> Result<TemporalIndicator> {
    let c = &problem.components[i];
    let mesh = u_k[i].space.mesh();
    let tau = t1 - t0;
    let mut out = TemporalIndicator::default();
    let (mut uk, mut ukm, mut ak, mut akm, mut g) = (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let gauss = time_gauss2(t0, t1);
    let mut t1_sq = [0.0; 2];
    let mut t2_sq = [0.0; 2];
    for (ci, cell) in mesh.cells().iter().enumerate() {
        sample(&u_k[i], ci, &tables.tri, &mut uk, &mut g);
        sample(&u_km1[i], ci, &tables.tri, &mut ukm, &mut g);
        sample(a_k, ci, &tables.tri, &mut ak, &mut g);
        sample(a_km1, ci, &tables.tri, &mut akm, &mut g);
        for q in 0..tables.tri_rule.len() {
            let x = cell.map(tables.tri_rule.points[q]);
            let wq = tables.tri_rule.weights[q] * 2.0 * cell.area;
            let bk = (c.velocity)(x, t1);
            let bkm = (c.velocity)(x, t0);
            let dk = (c.velocity_div)(x, t1);
            let dkm = (c.velocity_div)(x, t0);
            let fk = (c.source)(x, t1);
            for (n, &(t, _)) in gauss.iter().enumerate() {
                let lk = (t - t0) / tau;
                let lkm = 1.0 - lk;
                let b = (c.velocity)(x, t);
                let v1 = [
                    lk * (bk[0] - b[0]) * uk[q] + lkm * (bkm[0] - b[0]) * ukm[q],
                    lk * (bk[1] - b[1]) * uk[q] + lkm * (bkm[1] - b[1]) * ukm[q],
                ];
                t1_sq[n] += wq * (v1[0] * v1[0] + v1[1] * v1[1]) / w.eps;
                let d = (c.velocity_div)(x, t);
                let v2 =
                    (c.source)(x, t) - fk + lkm * (ak[q] - akm[q]) + lk * (dk - d) * uk[q] + lk * (dkm - d) * ukm[q];
                t2_sq[n] += wq * v2 * v2;
            }
        }
    }
    for (n, &(_, wt)) in gauss.iter().enumerate() {
        out.t1_sq_int += wt * t1_sq[n];
        out.t2_sq_int += wt * t2_sq[n];
        out.t2_int += wt * t2_sq[n].sqrt();
    }
    out.tilde_sq = out.t1_sq_int + w.rho_t().min(problem.final_time) * out.t2_sq_int;
    Ok(out)
}

/// Temporal indicator alone, for the halving loop on an unchanged mesh.
#[allow(clippy::too_many_arguments)]
pub fn temporal_step_indicator(
    problem: &Problem,
    weights: &[Weights],
    u_prev: &[DGFunction],
    u: &[DGFunction],
    source_prev: &[DGFunction],
    source: &[DGFunction],
    t0: f64,
    t1: f64,
) -> Result<Vec<TemporalIndicator>> {
    let us = &u[0].space;
    let (u_km1, a_km1) = if us.mesh().same_leaves(u_prev[0].space.mesh()) {
        (u_prev.to_vec(), source_prev.to_vec())
    } else {
        let uni = union_of(us, u_prev[0].space.mesh())?;
        let up = transfer(&uni.space, u_prev)?;
        let ap = transfer(&uni.space, source_prev)?;
        let uk = transfer(&uni.space, u)?;
        let ak = transfer(&uni.space, source)?;
        let tables = estimator_tables(&uk[0])?;
        return (0..problem.num_components())
            .map(|i| temporal_on_union(problem, i, &weights[i], &up, &uk, &ap[i], &ak[i], t0, t1, &tables))
            .collect();
    };
    let tables = estimator_tables(&u[0])?;
    (0..problem.num_components())
        .map(|i| temporal_on_union(problem, i, &weights[i], &u_km1, u, &a_km1[i], &source[i], t0, t1, &tables))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::Penalty;
    use crate::geometry::{isotropic, Rect};
    use crate::mesh::BoundaryTags;
    use crate::problems::{Component, ExactSolution, RunDefaults};

    /// `-eps lap u + beta.grad u = f` with exact `u = x + 2y`, `f = beta.(1, 2)`.
    fn linear_problem(eps: f64) -> Problem {
        let beta = [1.0, 0.5];
        Problem {
            name: "lin".into(),
            domain: Rect::unit(),
            boundary: BoundaryTags::default(),
            components: vec![Component {
                diffusion: Arc::new(move |_| isotropic(eps)),
                diffusion_min: eps,
                velocity: Arc::new(move |_, _| beta),
                velocity_div: Arc::new(|_, _| 0.0),
                source: Arc::new(move |_, _| beta[0] + 2.0 * beta[1]),
                dirichlet: Arc::new(|x, _| x[0] + 2.0 * x[1]),
                initial: Arc::new(|x| x[0] + 2.0 * x[1]),
                exact: Some(ExactSolution {
                    value: Arc::new(|x, _| x[0] + 2.0 * x[1]),
                    grad: Arc::new(|_, _| [1.0, 2.0]),
                }),
            }],
            reaction: Arc::new(|_, r, d| {
                r[0] = 0.0;
                d[0] = 0.0;
                Ok(())
            }),
            kappa: 0.0,
            final_time: 1.0,
            static_velocity: true,
            defaults: RunDefaults {
                degree: 1,
                nx: 2,
                ny: 2,
                tau0: 0.1,
                ttol: 1.0,
                stol_plus: 1.0,
                stol_minus: 0.0,
                max_level: 24,
            },
        }
    }

    fn space(n: usize, k: usize) -> DGSpace {
        DGSpace::new(Arc::new(Mesh::build_structured(Rect::unit(), n, n).unwrap()), k).unwrap()
    }

    #[test]
    fn exact_discrete_solution_has_zero_indicator() {
        let p = linear_problem(0.1);
        let s = space(3, 1);
        let u = vec![s.project(|x| x[0] + 2.0 * x[1])];
        let w = Weights::new(0.1, 0.0, Penalty::for_degree(1));
        let r = stationary_indicator(&p, 0, &u, 0.0, &w).unwrap();
        assert!(r.eta < 1e-10 && r.theta < 1e-10, "{} {}", r.eta, r.theta);
    }

    #[test]
    fn elliptic_source_examples() {
        let s = space(2, 2);
        let u = s.project(|x| x[0] * x[1]);
        let f0 = s.zero();
        assert!(elliptic_source(&u, &u, &f0, 0.1).coeffs.iter().all(|&c| c == 0.0));
        let wf = s.project(|x| x[0] - x[1]);
        let next = DGFunction {
            space: s.clone(),
            coeffs: u.coeffs.iter().zip(&wf.coeffs).map(|(a, b)| a + 0.1 * b).collect(),
        };
        let a = elliptic_source(&u, &next, &f0, 0.1);
        for (x, y) in a.coeffs.iter().zip(&wf.coeffs) {
            assert!((x + y).abs() < 1e-12);
        }
    }

    fn step_input_fixture(
        p: &Problem,
        s: &DGSpace,
        prev: &DGFunction,
        curr: &DGFunction,
        t0: f64,
        t1: f64,
    ) -> StepEstimate {
        let w = vec![Weights::new(p.components[0].diffusion_min, 0.0, Penalty::for_degree(s.degree()))];
        let f = s.project(|x| (p.components[0].source)(x, t1));
        let a_prev = vec![s.zero()];
        let inp = StepInput {
            problem: p,
            weights: &w,
            t_prev: t0,
            t: t1,
            u_prev: std::slice::from_ref(prev),
            source_prev: &a_prev,
            u_prev_proj: std::slice::from_ref(prev),
            u: std::slice::from_ref(curr),
            f_proj: std::slice::from_ref(&f),
        };
        spatial_step_estimate(&inp).unwrap()
    }

    #[test]
    fn zero_properties_of_step_estimators() {
        let p = linear_problem(0.1);
        let s = space(2, 1);
        let u = s.project(|x| x[0] + 2.0 * x[1]);
        let e = step_input_fixture(&p, &s, &u, &u, 0.0, 0.1);
        let c = &e.components[0];
        assert!(c.s2_sq < 1e-24, "{}", c.s2_sq);
        assert!(c.s3_sq < 1e-24 && c.s4_sq < 1e-24);
        assert!(c.temporal.t1_sq_int == 0.0);
        // Static data with A^k = A^{k-1}: temporal indicator vanishes.
        let w = vec![Weights::new(0.1, 0.0, Penalty::for_degree(1))];
        let a = vec![s.project(|x| x[1])];
        let t = temporal_step_indicator(&p, &w, std::slice::from_ref(&u), std::slice::from_ref(&u), &a, &a, 0.0, 0.1)
            .unwrap();
        assert!(t[0].tilde_sq < 1e-26);
    }

    #[test]
    fn s1_elements_restrict_to_current_mesh() {
        let p = linear_problem(0.01);
        let s = space(2, 1);
        let fine = s.on_mesh(Arc::new(s.mesh().refine(&[0, 3]).unwrap()));
        let prev = fine.project(|x| (3.0 * x[0]).sin());
        let curr = s.project(|x| (2.0 * x[1]).cos());
        let w = vec![Weights::new(0.01, 0.0, Penalty::for_degree(1))];
        let f = s.project(|x| (p.components[0].source)(x, 0.1));
        let prev_proj = s.project_function(&prev).unwrap();
        let a_prev = vec![fine.zero()];
        let inp = StepInput {
            problem: &p,
            weights: &w,
            t_prev: 0.0,
            t: 0.1,
            u_prev: std::slice::from_ref(&prev),
            source_prev: &a_prev,
            u_prev_proj: std::slice::from_ref(&prev_proj),
            u: std::slice::from_ref(&curr),
            f_proj: std::slice::from_ref(&f),
        };
        let e = spatial_step_estimate(&inp).unwrap();
        let c = &e.components[0];
        assert_eq!(c.s1_elements.len(), s.mesh().num_cells());
        let sum: f64 = c.s1_elements.iter().sum();
        assert!((sum - c.s1_sq).abs() <= 1e-12 * c.s1_sq);
        assert_eq!(e.union_dofs, fine.dof());
        assert!(c.s2_sq > 0.0);
    }

    #[test]
    fn estimators_are_homogeneous() {
        // Linear data, so scaling u, f and g scales everything.
        let p = linear_problem(0.05);
        let mut p2 = p.clone();
        let c = p2.components[0].clone();
        p2.components[0].source = Arc::new(move |x, t| -3.0 * (c.source)(x, t));
        let c = p.components[0].clone();
        p2.components[0].dirichlet = Arc::new(move |x, t| -3.0 * (c.dirichlet)(x, t));
        let s = space(2, 2);
        let a = s.project(|x| (2.0 * x[0]).sin() * x[1]);
        let b = s.project(|x| (x[0] - x[1]).exp());
        let e1 = step_input_fixture(&p, &s, &a, &b, 0.0, 0.2);
        let e2 = step_input_fixture(&p2, &s, &a.scaled(-3.0), &b.scaled(-3.0), 0.0, 0.2);
        let (c1, c2) = (&e1.components[0], &e2.components[0]);
        for (x, y) in [
            (c1.s1_sq, c2.s1_sq),
            (c1.s2_sq, c2.s2_sq),
            (c1.s3_sq, c2.s3_sq),
            (c1.s4_sq, c2.s4_sq),
            (c1.temporal.tilde_sq, c2.temporal.tilde_sq),
        ] {
            assert!((9.0 * x - y).abs() <= 1e-12 * y + 1e-24, "{x} {y}");
        }
        let w = Weights::new(0.05, 0.0, Penalty::for_degree(2));
        let r1 = stationary_indicator(&p, 0, std::slice::from_ref(&a), 0.0, &w).unwrap();
        let r2 = stationary_indicator(&p2, 0, &[a.scaled(-3.0)], 0.0, &w).unwrap();
        assert!((3.0 * r1.eta - r2.eta).abs() <= 1e-12 * r2.eta);
    }

    #[test]
    fn jump_terms_vanish_at_first_order_for_a_smooth_field() {
        let p = linear_problem(1.0);
        let mut last = f64::INFINITY;
        let mut rates = Vec::new();
        for n in [4, 8, 16] {
            let s = space(n, 1);
            let pi = std::f64::consts::PI;
            let u = s.project(|x| (pi * x[0]).sin() * (pi * x[1]).sin() + x[0] + 2.0 * x[1]);
            let e = step_input_fixture(&p, &s, &u, &u, 0.0, 0.1);
            let v = e.components[0].s3_sq.sqrt();
            rates.push((last / v).log2());
            last = v;
        }
        assert!(rates[1..].iter().all(|&r| r >= 0.9), "{rates:?}");
    }
}
