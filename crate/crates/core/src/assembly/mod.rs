//! SIPG operators: mass matrix, stiffness matrix of the diffusion, upwind
//! convection, penalty and symmetric consistency terms, load vectors with
//! weak boundary data, and the reaction vector with its Jacobian.
//!
//! Each system component `c` occupies the contiguous vector range
//! `c * dof .. (c + 1) * dof`.

pub mod matrix;

pub use matrix::{BlockMatrix, BlockPattern};

use crate::dg::space::{physical_basis, DGSpace, Tables};
use crate::error::{Error, Result};
use crate::geometry::{min_eigenvalue, Point, Tensor2};
use crate::mesh::EdgeKind;
use crate::problems::Problem;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeClass {
    Interior,
    Boundary,
}

/// Penalty parameter for degree `k`.
pub fn penalty(k: usize, kind: EdgeClass) -> f64 {
    let base = (k * (k + 1)) as f64;
    match kind {
        EdgeClass::Interior => 3.0 * base,
        EdgeClass::Boundary => 6.0 * base,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Penalty {
    pub interior: f64,
    pub boundary: f64,
}

impl Penalty {
    pub fn for_degree(k: usize) -> Self {
        Penalty { interior: penalty(k, EdgeClass::Interior), boundary: penalty(k, EdgeClass::Boundary) }
    }

    pub fn scaled(self, s: f64) -> Self {
        Penalty { interior: self.interior * s, boundary: self.boundary * s }
    }

    pub fn on(&self, kind: EdgeKind) -> f64 {
        if kind == EdgeKind::Interior {
            self.interior
        } else {
            self.boundary
        }
    }
}

/// Selects parts of the stiffness form, mainly for testing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Terms {
    pub volume: bool,
    pub upwind: bool,
    pub penalty: bool,
    pub consistency: bool,
}

impl Terms {
    pub const ALL: Terms = Terms { volume: true, upwind: true, penalty: true, consistency: true };
    pub const PENALTY: Terms = Terms { volume: false, upwind: false, penalty: true, consistency: false };
}

/// Largest eigenvalue of a symmetric 2x2 tensor.
pub fn max_eigenvalue(m: &Tensor2) -> f64 {
    m[0][0] + m[1][1] - min_eigenvalue(m)
}

fn tensor_avg(a: &Tensor2, b: &Tensor2) -> Tensor2 {
    [[0.5 * (a[0][0] + b[0][0]), 0.5 * (a[0][1] + b[0][1])], [0.5 * (a[1][0] + b[1][0]), 0.5 * (a[1][1] + b[1][1])]]
}

fn flux(e: &Tensor2, g: [f64; 2], n: Point) -> f64 {
    (e[0][0] * g[0] + e[0][1] * g[1]) * n[0] + (e[1][0] * g[0] + e[1][1] * g[1]) * n[1]
}

/// Assembles all discrete operators of a problem on one space.
pub struct Assembler<'a> {
    space: &'a DGSpace,
    problem: &'a Problem,
    tables: Tables,
    penalty: Penalty,
    pattern: Arc<BlockPattern>,
    cell_diffusion: Option<Vec<Tensor2>>,
}

/// Scratch buffers of physical basis data.
#[derive(Default)]
struct Phys {
    val: Vec<f64>,
    grad: Vec<[f64; 2]>,
}

impl<'a> Assembler<'a> {
    pub fn new(space: &'a DGSpace, problem: &'a Problem) -> Result<Self> {
        Self::with_exactness(space, problem, space.default_exactness())
    }

    pub fn with_exactness(space: &'a DGSpace, problem: &'a Problem, exactness: usize) -> Result<Self> {
        let pattern = BlockPattern::new(space.mesh(), space.nloc(), problem.num_components());
        Ok(Assembler {
            space,
            problem,
            tables: space.tables(exactness)?,
            penalty: Penalty::for_degree(space.degree().max(1)),
            pattern,
            cell_diffusion: None,
        })
    }

    pub fn with_penalty(mut self, penalty: Penalty) -> Self {
        self.penalty = penalty;
        self
    }

    /// Uses one constant diffusion tensor per element instead of the
    /// problem's diffusion field (single-component problems only).
    pub fn with_cell_diffusion(mut self, tensors: Vec<Tensor2>) -> Self {
        assert_eq!(tensors.len(), self.space.mesh().num_cells());
        self.cell_diffusion = Some(tensors);
        self
    }

    /// Reuses the sparsity pattern of another assembler on the same mesh.
    pub fn with_pattern(mut self, pattern: Arc<BlockPattern>) -> Self {
        assert_eq!(pattern.ncells, self.space.mesh().num_cells());
        self.pattern = pattern;
        self
    }

    pub fn pattern(&self) -> &Arc<BlockPattern> {
        &self.pattern
    }

    pub fn penalty(&self) -> Penalty {
        self.penalty
    }

    pub fn space(&self) -> &DGSpace {
        self.space
    }

    pub fn problem(&self) -> &Problem {
        self.problem
    }

    pub fn tables(&self) -> &Tables {
        &self.tables
    }

    /// Total unknowns over all components.
    pub fn dim(&self) -> usize {
        self.space.dof() * self.problem.num_components()
    }

    fn block_index(&self, comp: usize, cell: usize) -> usize {
        comp * self.space.mesh().num_cells() + cell
    }

    fn diffusion(&self, comp: usize, cell: usize, x: Point) -> Tensor2 {
        match &self.cell_diffusion {
            Some(t) => t[cell],
            None => (self.problem.components[comp].diffusion)(x),
        }
    }

    pub fn mass(&self) -> BlockMatrix {
        let mut m = BlockMatrix::zeros(self.pattern.clone());
        let n = self.space.nloc();
        let t = &self.tables;
        let mut p = Phys::default();
        for (ci, cell) in self.space.mesh().cells().iter().enumerate() {
            physical_basis(cell, &t.tri, &mut p.val, &mut p.grad);
            let mut local = vec![0.0; n * n];
            for q in 0..t.tri_rule.len() {
                let w = t.tri_rule.weights[q] * 2.0 * cell.area;
                let v = &p.val[q * n..(q + 1) * n];
                for r in 0..n {
                    for c in 0..n {
                        local[r * n + c] += w * v[r] * v[c];
                    }
                }
            }
            for comp in 0..self.problem.num_components() {
                let b = self.block_index(comp, ci);
                m.block_mut(b, b).copy_from_slice(&local);
            }
        }
        m
    }

    pub fn stiffness(&self, t: f64) -> BlockMatrix {
        self.stiffness_terms(t, Terms::ALL)
    }

    pub fn stiffness_terms(&self, time: f64, terms: Terms) -> BlockMatrix {
        let mut s = BlockMatrix::zeros(self.pattern.clone());
        let n = self.space.nloc();
        let mesh = self.space.mesh();
        let t = &self.tables;
        let mut p = Phys::default();
        let mut pr = Phys::default();
        for comp in 0..self.problem.num_components() {
            let beta = &self.problem.components[comp].velocity;
            if terms.volume {
                for (ci, cell) in mesh.cells().iter().enumerate() {
                    physical_basis(cell, &t.tri, &mut p.val, &mut p.grad);
                    let b = self.block_index(comp, ci);
                    let blk = s.block_mut(b, b);
                    for q in 0..t.tri_rule.len() {
                        let x = cell.map(t.tri_rule.points[q]);
                        let w = t.tri_rule.weights[q] * 2.0 * cell.area;
                        let e = self.diffusion(comp, ci, x);
                        let bv = beta(x, time);
                        let v = &p.val[q * n..(q + 1) * n];
                        let g = &p.grad[q * n..(q + 1) * n];
                        for c in 0..n {
                            let eg = [e[0][0] * g[c][0] + e[0][1] * g[c][1], e[1][0] * g[c][0] + e[1][1] * g[c][1]];
                            let conv = bv[0] * g[c][0] + bv[1] * g[c][1];
                            for r in 0..n {
                                blk[r * n + c] += w * (eg[0] * g[r][0] + eg[1] * g[r][1] + conv * v[r]);
                            }
                        }
                    }
                }
            }
            for e in mesh.edges() {
                let li = e.left;
                let lcell = mesh.cell(li);
                let lt = t.edge_table(e.left_local, e.left_flip);
                physical_basis(lcell, lt, &mut p.val, &mut p.grad);
                let sigma = self.penalty.on(e.kind);
                match e.right {
                    Some(ri) => {
                        let rcell = mesh.cell(ri);
                        let rt = t.edge_table(e.right_local, e.right_flip);
                        physical_basis(rcell, rt, &mut pr.val, &mut pr.grad);
                        let mut a = [vec![0.0; n * n], vec![0.0; n * n], vec![0.0; n * n], vec![0.0; n * n]];
                        for q in 0..t.edge_rule.len() {
                            let x = e.point(t.edge_rule.points[q][0]);
                            let w = t.edge_rule.weights[q] * e.length;
                            let ei = self.diffusion(comp, li, x);
                            let ej = self.diffusion(comp, ri, x);
                            let pen = sigma * max_eigenvalue(&tensor_avg(&ei, &ej)) / e.length;
                            let vs = [&p.val[q * n..(q + 1) * n], &pr.val[q * n..(q + 1) * n]];
                            let gs = [&p.grad[q * n..(q + 1) * n], &pr.grad[q * n..(q + 1) * n]];
                            let fl: [Vec<f64>; 2] = [
                                gs[0].iter().map(|g| flux(&ei, *g, e.normal)).collect(),
                                gs[1].iter().map(|g| flux(&ej, *g, e.normal)).collect(),
                            ];
                            let sign = [1.0, -1.0];
                            for sa in 0..2 {
                                for sb in 0..2 {
                                    let blk = &mut a[sa * 2 + sb];
                                    for r in 0..n {
                                        for c in 0..n {
                                            let mut v = 0.0;
                                            if terms.penalty {
                                                v += pen * sign[sa] * sign[sb] * vs[sa][r] * vs[sb][c];
                                            }
                                            if terms.consistency {
                                                v -= 0.5 * fl[sa][r] * sign[sb] * vs[sb][c];
                                                v -= 0.5 * fl[sb][c] * sign[sa] * vs[sa][r];
                                            }
                                            blk[r * n + c] += w * v;
                                        }
                                    }
                                }
                            }
                            if terms.upwind {
                                let bn = {
                                    let b = beta(x, time);
                                    b[0] * e.normal[0] + b[1] * e.normal[1]
                                };
                                if bn < 0.0 {
                                    // Inflow into the left element from the right.
                                    for r in 0..n {
                                        for c in 0..n {
                                            a[1][r * n + c] += w * bn * vs[0][r] * vs[1][c];
                                            a[0][r * n + c] -= w * bn * vs[0][r] * vs[0][c];
                                        }
                                    }
                                } else if bn > 0.0 {
                                    for r in 0..n {
                                        for c in 0..n {
                                            a[2][r * n + c] -= w * bn * vs[1][r] * vs[0][c];
                                            a[3][r * n + c] += w * bn * vs[1][r] * vs[1][c];
                                        }
                                    }
                                }
                            }
                        }
                        let (bi, bj) = (self.block_index(comp, li), self.block_index(comp, ri));
                        for (k, (x, y)) in [(bi, bi), (bi, bj), (bj, bi), (bj, bj)].into_iter().enumerate() {
                            for (d, v) in s.block_mut(x, y).iter_mut().zip(&a[k]) {
                                *d += v;
                            }
                        }
                    }
                    None => {
                        let mut a = vec![0.0; n * n];
                        for q in 0..t.edge_rule.len() {
                            let x = e.point(t.edge_rule.points[q][0]);
                            let w = t.edge_rule.weights[q] * e.length;
                            let v = &p.val[q * n..(q + 1) * n];
                            if e.kind == EdgeKind::Dirichlet {
                                let ei = self.diffusion(comp, li, x);
                                let pen = sigma * max_eigenvalue(&ei) / e.length;
                                let fl: Vec<f64> =
                                    p.grad[q * n..(q + 1) * n].iter().map(|g| flux(&ei, *g, e.normal)).collect();
                                for r in 0..n {
                                    for c in 0..n {
                                        let mut val = 0.0;
                                        if terms.penalty {
                                            val += pen * v[r] * v[c];
                                        }
                                        if terms.consistency {
                                            val -= fl[r] * v[c] + fl[c] * v[r];
                                        }
                                        a[r * n + c] += w * val;
                                    }
                                }
                            }
                            if terms.upwind {
                                let b = beta(x, time);
                                let bn = b[0] * e.normal[0] + b[1] * e.normal[1];
                                if bn < 0.0 {
                                    for r in 0..n {
                                        for c in 0..n {
                                            a[r * n + c] -= w * bn * v[r] * v[c];
                                        }
                                    }
                                }
                            }
                        }
                        let bi = self.block_index(comp, li);
                        for (d, v) in s.block_mut(bi, bi).iter_mut().zip(&a) {
                            *d += v;
                        }
                    }
                }
            }
        }
        s
    }

    /// `(f(., t), phi)` for every component, without boundary terms.
    pub fn source_load(&self, time: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for comp in 0..self.problem.num_components() {
            let f = &self.problem.components[comp].source;
            self.add_field_load(comp, &|x| f(x, time), &mut out);
        }
        out
    }

    /// Adds `(g, phi)` for component `comp`.
    pub fn add_field_load(&self, comp: usize, g: &dyn Fn(Point) -> f64, out: &mut [f64]) {
        let n = self.space.nloc();
        let t = &self.tables;
        let mut p = Phys::default();
        for (ci, cell) in self.space.mesh().cells().iter().enumerate() {
            physical_basis(cell, &t.tri, &mut p.val, &mut p.grad);
            let off = self.block_index(comp, ci) * n;
            for q in 0..t.tri_rule.len() {
                let w = t.tri_rule.weights[q] * 2.0 * cell.area * g(cell.map(t.tri_rule.points[q]));
                for r in 0..n {
                    out[off + r] += w * p.val[q * n + r];
                }
            }
        }
    }

    /// Weak boundary data: Dirichlet penalty and consistency terms and the
    /// upwind inflow data.
    pub fn boundary_load(&self, time: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        let n = self.space.nloc();
        let mesh = self.space.mesh();
        let t = &self.tables;
        let mut p = Phys::default();
        for comp in 0..self.problem.num_components() {
            let c = &self.problem.components[comp];
            for e in mesh.edges().iter().filter(|e| e.kind.is_boundary()) {
                let cell = mesh.cell(e.left);
                physical_basis(cell, t.edge_table(e.left_local, e.left_flip), &mut p.val, &mut p.grad);
                let off = self.block_index(comp, e.left) * n;
                let sigma = self.penalty.on(e.kind);
                for q in 0..t.edge_rule.len() {
                    let x = e.point(t.edge_rule.points[q][0]);
                    let w = t.edge_rule.weights[q] * e.length;
                    let b = (c.velocity)(x, time);
                    let bn = b[0] * e.normal[0] + b[1] * e.normal[1];
                    let dirichlet = e.kind == EdgeKind::Dirichlet;
                    if !dirichlet && bn >= 0.0 {
                        continue;
                    }
                    let g = (c.dirichlet)(x, time);
                    let ei = self.diffusion(comp, e.left, x);
                    let pen = sigma * max_eigenvalue(&ei) / e.length;
                    for r in 0..n {
                        let mut v = 0.0;
                        if dirichlet {
                            v += g * (pen * p.val[q * n + r] - flux(&ei, p.grad[q * n + r], e.normal));
                        }
                        if bn < 0.0 {
                            v -= bn * g * p.val[q * n + r];
                        }
                        out[off + r] += w * v;
                    }
                }
            }
        }
        out
    }

    /// Full right-hand side at time `t`.
    pub fn load(&self, time: f64) -> Vec<f64> {
        let mut f = self.source_load(time);
        for (a, b) in f.iter_mut().zip(self.boundary_load(time)) {
            *a += b;
        }
        f
    }

    fn reaction_impl(&self, u: &[f64], mut jac: Option<&mut BlockMatrix>) -> Result<Vec<f64>> {
        let ncomp = self.problem.num_components();
        let n = self.space.nloc();
        let t = &self.tables;
        let mut out = vec![0.0; self.dim()];
        let mut p = Phys::default();
        let mut state = vec![0.0; ncomp];
        let mut r = vec![0.0; ncomp];
        let mut d = vec![0.0; ncomp * ncomp];
        let mut local = vec![0.0; ncomp * ncomp * n * n];
        for (ci, cell) in self.space.mesh().cells().iter().enumerate() {
            physical_basis(cell, &t.tri, &mut p.val, &mut p.grad);
            local.iter_mut().for_each(|v| *v = 0.0);
            for q in 0..t.tri_rule.len() {
                let w = t.tri_rule.weights[q] * 2.0 * cell.area;
                let v = &p.val[q * n..(q + 1) * n];
                for (c, s) in state.iter_mut().enumerate() {
                    let off = self.block_index(c, ci) * n;
                    *s = u[off..off + n].iter().zip(v).map(|(a, b)| a * b).sum();
                }
                (self.problem.reaction)(&state, &mut r, &mut d)
                    .map_err(|reason| Error::Reaction { element: ci, reason })?;
                for (c, rc) in r.iter().enumerate() {
                    let off = self.block_index(c, ci) * n;
                    for row in 0..n {
                        out[off + row] += w * rc * v[row];
                    }
                }
                if jac.is_some() {
                    for c in 0..ncomp {
                        for c2 in 0..ncomp {
                            let dv = w * d[c * ncomp + c2];
                            if dv == 0.0 {
                                continue;
                            }
                            let blk = &mut local[(c * ncomp + c2) * n * n..(c * ncomp + c2 + 1) * n * n];
                            for row in 0..n {
                                for col in 0..n {
                                    blk[row * n + col] += dv * v[row] * v[col];
                                }
                            }
                        }
                    }
                }
            }
            if let Some(j) = jac.as_deref_mut() {
                for c in 0..ncomp {
                    for c2 in 0..ncomp {
                        let blk = &local[(c * ncomp + c2) * n * n..(c * ncomp + c2 + 1) * n * n];
                        j.block_mut(self.block_index(c, ci), self.block_index(c2, ci)).copy_from_slice(blk);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Reaction vector `(r(u_h), phi)` and its Jacobian.
    pub fn reaction(&self, u: &[f64]) -> Result<(Vec<f64>, BlockMatrix)> {
        let mut j = BlockMatrix::zeros(self.pattern.clone());
        let b = self.reaction_impl(u, Some(&mut j))?;
        Ok((b, j))
    }

    pub fn reaction_vector(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.reaction_impl(u, None)
    }
}
