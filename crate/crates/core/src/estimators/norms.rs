//! L2, energy and jump norms of discrete functions and of errors against
//! exact solutions.

use super::{sample, Weights};
use crate::assembly::{max_eigenvalue, Penalty};
use crate::dg::basis::BasisTable;
use crate::dg::quadrature::{quadrature, time_gauss2, QuadratureKind, MAX_EXACTNESS};
use crate::dg::space::{DGFunction, DGSpace, Tables};
use crate::error::Result;
use crate::geometry::Point;
use crate::mesh::EdgeKind;
use crate::problems::{Component, ExactSolution, Problem};

/// `sum_i c_i u_i + s u_exact(., t)` with all `u_i` on one space.
#[derive(Clone)]
pub struct FieldCombo<'a> {
    pub parts: Vec<(f64, &'a DGFunction)>,
    pub exact: Option<(f64, &'a ExactSolution, f64)>,
}

impl<'a> FieldCombo<'a> {
    pub fn of(u: &'a DGFunction) -> Self {
        FieldCombo { parts: vec![(1.0, u)], exact: None }
    }

    /// `u_exact(., t) - u`.
    pub fn error(u: &'a DGFunction, exact: &'a ExactSolution, t: f64) -> Self {
        FieldCombo { parts: vec![(-1.0, u)], exact: Some((1.0, exact, t)) }
    }

    fn space(&self) -> &DGSpace {
        &self.parts[0].1.space
    }

    fn sample(
        &self,
        element: usize,
        table: &BasisTable,
        points: &[Point],
        val: &mut Vec<f64>,
        grad: &mut Vec<[f64; 2]>,
    ) {
        val.clear();
        val.resize(points.len(), 0.0);
        grad.clear();
        grad.resize(points.len(), [0.0; 2]);
        let (mut v, mut g) = (Vec::new(), Vec::new());
        for &(c, u) in &self.parts {
            sample(u, element, table, &mut v, &mut g);
            for q in 0..points.len() {
                val[q] += c * v[q];
                grad[q][0] += c * g[q][0];
                grad[q][1] += c * g[q][1];
            }
        }
        if let Some((s, e, t)) = self.exact {
            for (q, &x) in points.iter().enumerate() {
                val[q] += s * (e.value)(x, t);
                let d = (e.grad)(x, t);
                grad[q][0] += s * d[0];
                grad[q][1] += s * d[1];
            }
        }
    }
}

fn norm_tables(space: &DGSpace, exact: bool) -> Result<Tables> {
    let k = space.degree();
    let e = if exact { 2 * k + 6 } else { 2 * k + 2 };
    space.tables(e.min(MAX_EXACTNESS))
}

/// Volume and edge pieces of a norm, before taking square roots.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NormParts {
    pub l2_sq: f64,
    /// `sum_K ||sqrt(eps) grad v||^2`.
    pub diffusion_sq: f64,
    /// `sum_e (eps_e sigma / h_e) ||[v]||^2` over interior and Dirichlet edges.
    pub penalty_sq: f64,
    /// `sum_e h_e ||[v]||^2` over the same edges.
    pub h_jump_sq: f64,
}

pub fn norm_parts(v: &FieldCombo, comp: &Component, penalty: Penalty) -> Result<NormParts> {
    let space = v.space();
    let mesh = space.mesh();
    let t = norm_tables(space, v.exact.is_some())?;
    let mut out = NormParts::default();
    let (mut val, mut grad) = (Vec::new(), Vec::new());
    let (mut val2, mut grad2) = (Vec::new(), Vec::new());
    let mut pts = Vec::new();
    for (ci, c) in mesh.cells().iter().enumerate() {
        pts.clear();
        pts.extend(t.tri_rule.points.iter().map(|&r| c.map(r)));
        v.sample(ci, &t.tri, &pts, &mut val, &mut grad);
        for q in 0..pts.len() {
            let w = t.tri_rule.weights[q] * 2.0 * c.area;
            let e = (comp.diffusion)(pts[q]);
            let g = grad[q];
            out.l2_sq += w * val[q] * val[q];
            out.diffusion_sq +=
                w * (g[0] * (e[0][0] * g[0] + e[0][1] * g[1]) + g[1] * (e[1][0] * g[0] + e[1][1] * g[1]));
        }
    }
    for e in mesh.edges() {
        if e.kind == EdgeKind::Neumann {
            continue;
        }
        pts.clear();
        pts.extend(t.edge_rule.points.iter().map(|p| e.point(p[0])));
        v.sample(e.left, t.edge_table(e.left_local, e.left_flip), &pts, &mut val, &mut grad);
        if let Some(r) = e.right {
            v.sample(r, t.edge_table(e.right_local, e.right_flip), &pts, &mut val2, &mut grad2);
        }
        let sigma = penalty.on(e.kind);
        for q in 0..pts.len() {
            let w = t.edge_rule.weights[q] * e.length;
            let jump = if e.right.is_some() { val[q] - val2[q] } else { val[q] };
            let eps_e = max_eigenvalue(&(comp.diffusion)(pts[q]));
            out.penalty_sq += w * eps_e * sigma / e.length * jump * jump;
            out.h_jump_sq += w * e.length * jump * jump;
        }
    }
    Ok(out)
}

/// Jump sums `sum_e c(h_e) ||[v]||^2` over interior and Dirichlet edges.
fn jump_sum(v: &FieldCombo, weight: &dyn Fn(f64) -> f64) -> Result<f64> {
    let space = v.space();
    let mesh = space.mesh();
    let t = norm_tables(space, v.exact.is_some())?;
    let (mut val, mut grad, mut val2, mut grad2) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut sum = 0.0;
    for e in mesh.edges().iter().filter(|e| e.kind != EdgeKind::Neumann) {
        let pts: Vec<Point> = t.edge_rule.points.iter().map(|p| e.point(p[0])).collect();
        v.sample(e.left, t.edge_table(e.left_local, e.left_flip), &pts, &mut val, &mut grad);
        if let Some(r) = e.right {
            v.sample(r, t.edge_table(e.right_local, e.right_flip), &pts, &mut val2, &mut grad2);
        }
        let c = weight(e.length);
        for q in 0..pts.len() {
            let jump = if e.right.is_some() { val[q] - val2[q] } else { val[q] };
            sum += t.edge_rule.weights[q] * e.length * c * jump * jump;
        }
    }
    Ok(sum)
}

/// `||u||_{L2}` by quadrature.
pub fn l2_norm(u: &DGFunction) -> f64 {
    let t = norm_tables(&u.space, false).expect("tables");
    let (mut v, mut g) = (Vec::new(), Vec::new());
    let mut s = 0.0;
    for (ci, c) in u.space.mesh().cells().iter().enumerate() {
        sample(u, ci, &t.tri, &mut v, &mut g);
        s += v.iter().zip(&t.tri_rule.weights).map(|(a, w)| w * 2.0 * c.area * a * a).sum::<f64>();
    }
    s.sqrt()
}

/// `||u - f||_{L2}`.
pub fn l2_error(u: &DGFunction, f: impl Fn(Point) -> f64) -> f64 {
    let k = u.space.degree();
    let rule = quadrature(QuadratureKind::Triangle, (2 * k + 6).min(MAX_EXACTNESS)).expect("rule");
    let table = u.space.basis().tabulate(&rule.points);
    let (mut v, mut g) = (Vec::new(), Vec::new());
    let mut s = 0.0;
    for (ci, c) in u.space.mesh().cells().iter().enumerate() {
        sample(u, ci, &table, &mut v, &mut g);
        for (q, &r) in rule.points.iter().enumerate() {
            let d = v[q] - f(c.map(r));
            s += rule.weights[q] * 2.0 * c.area * d * d;
        }
    }
    s.sqrt()
}

/// `|||v|||^2 = sum_K (||sqrt(eps) grad v||^2 + kappa ||v||^2) + sum_e (eps sigma / h_e) ||[v]||^2`.
pub fn energy_norm_sq(v: &FieldCombo, comp: &Component, kappa: f64, penalty: Penalty) -> Result<f64> {
    let p = norm_parts(v, comp, penalty)?;
    Ok(p.diffusion_sq + kappa * p.l2_sq + p.penalty_sq)
}

pub fn energy_norm(v: &DGFunction, comp: &Component, kappa: f64, penalty: Penalty) -> f64 {
    energy_norm_sq(&FieldCombo::of(v), comp, kappa, penalty).expect("tables").sqrt()
}

/// Computable part `sum_e (kappa h_e + h_e / eps) ||[v]||^2` of the
/// convective seminorm.
pub fn jump_seminorm_part(v: &DGFunction, eps: f64, kappa: f64) -> f64 {
    jump_seminorm_part_of(&FieldCombo::of(v), eps, kappa).expect("tables")
}

pub fn jump_seminorm_part_of(v: &FieldCombo, eps: f64, kappa: f64) -> Result<f64> {
    jump_sum(v, &|h| kappa * h + h / eps)
}

/// DG norm `|||v||| + |v|_C` with only the jump part of `|v|_C`.
pub fn dg_norm_of(v: &FieldCombo, comp: &Component, kappa: f64, penalty: Penalty) -> Result<f64> {
    let w = Weights::new(comp.diffusion_min, kappa, penalty);
    Ok(energy_norm_sq(v, comp, kappa, penalty)?.sqrt() + jump_seminorm_part_of(v, w.eps, kappa)?.sqrt())
}

/// Running `||e||_*^2 = max_k ||e(t_k)||^2 + int |||e|||^2 dt` over a
/// trajectory; `u_h` is linear in time on each interval.
#[derive(Clone, Debug, Default)]
pub struct ErrorAccumulator {
    pub max_l2_sq: f64,
    pub energy_integral: f64,
    pub final_l2: f64,
}

impl ErrorAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records `||e(t)||` at a time level.
    pub fn add_endpoint(&mut self, problem: &Problem, u: &[DGFunction], t: f64) -> Result<f64> {
        let mut s = 0.0;
        for (c, ui) in problem.components.iter().zip(u) {
            let ex = c.exact.as_ref().ok_or_else(|| crate::error::Error::MissingExactSolution(problem.name.clone()))?;
            s += l2_error(ui, |x| (ex.value)(x, t)).powi(2);
        }
        self.max_l2_sq = self.max_l2_sq.max(s);
        self.final_l2 = s.sqrt();
        Ok(s.sqrt())
    }

    /// Adds `int_{t0}^{t1} |||e|||^2 dt` for `u_h` interpolating `prev` and
    /// `curr`, which may live on different meshes of one forest.
    pub fn add_interval(
        &mut self,
        problem: &Problem,
        prev: &[DGFunction],
        curr: &[DGFunction],
        t0: f64,
        t1: f64,
        penalty: Penalty,
    ) -> Result<()> {
        let mesh = curr[0].space.mesh().union(prev[0].space.mesh())?;
        let space = curr[0].space.on_mesh(std::sync::Arc::new(mesh));
        for (i, c) in problem.components.iter().enumerate() {
            let ex = c.exact.as_ref().ok_or_else(|| crate::error::Error::MissingExactSolution(problem.name.clone()))?;
            let a = space.project_function(&prev[i])?;
            let b = space.project_function(&curr[i])?;
            for (t, w) in time_gauss2(t0, t1) {
                let l1 = (t - t0) / (t1 - t0);
                let v = FieldCombo { parts: vec![(-(1.0 - l1), &a), (-l1, &b)], exact: Some((1.0, ex, t)) };
                self.energy_integral += w * energy_norm_sq(&v, c, problem.kappa, penalty)?;
            }
        }
        Ok(())
    }

    pub fn star_norm(&self) -> f64 {
        (self.max_l2_sq + self.energy_integral).sqrt()
    }
}
