//! Discontinuous piecewise-polynomial spaces and functions on a leaf mesh.

use super::basis::{nloc, BasisEval, BasisTable, ReferenceBasis, MAX_DEGREE};
use super::quadrature::{quadrature, QuadratureKind, QuadratureRule};
use crate::error::{Error, Result};
use crate::geometry::{Point, Tensor2};
use crate::mesh::{reference_edge_point, Cell, Mesh};
use std::sync::Arc;

/// Degree-`k` discontinuous space. Element `i` owns the contiguous block
/// `i*nloc .. (i+1)*nloc`; physical basis functions are the reference
/// orthonormal functions scaled by `1/sqrt(2|K|)`, so every element mass
/// block is the identity.
#[derive(Clone, Debug)]
pub struct DGSpace {
    mesh: Arc<Mesh>,
    degree: usize,
    nloc: usize,
    basis: Arc<ReferenceBasis>,
}

impl DGSpace {
    pub fn new(mesh: Arc<Mesh>, degree: usize) -> Result<Self> {
        if degree > MAX_DEGREE {
            return Err(Error::InvalidArgument(format!("degree {degree} exceeds {MAX_DEGREE}")));
        }
        Ok(DGSpace { mesh, degree, nloc: nloc(degree), basis: Arc::new(ReferenceBasis::new(degree)) })
    }

    /// Same degree on another mesh, sharing the reference basis.
    pub fn on_mesh(&self, mesh: Arc<Mesh>) -> Self {
        DGSpace { mesh, degree: self.degree, nloc: self.nloc, basis: self.basis.clone() }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn nloc(&self) -> usize {
        self.nloc
    }

    pub fn dof(&self) -> usize {
        self.mesh.num_cells() * self.nloc
    }

    pub fn block(&self, element: usize) -> std::ops::Range<usize> {
        element * self.nloc..(element + 1) * self.nloc
    }

    pub fn basis(&self) -> &ReferenceBasis {
        &self.basis
    }

    /// Default exactness for assembly and estimator integrals.
    pub fn default_exactness(&self) -> usize {
        2 * self.degree + 2
    }

    pub fn tables(&self, exactness: usize) -> Result<Tables> {
        Tables::new(&self.basis, exactness)
    }

    pub fn zero(&self) -> DGFunction {
        DGFunction { space: self.clone(), coeffs: vec![0.0; self.dof()] }
    }

    pub fn from_coeffs(&self, coeffs: Vec<f64>) -> Result<DGFunction> {
        if coeffs.len() != self.dof() {
            return Err(Error::InvalidArgument(format!(
                "coefficient length {} does not match {} dofs",
                coeffs.len(),
                self.dof()
            )));
        }
        Ok(DGFunction { space: self.clone(), coeffs })
    }

    /// Element-wise L2 projection of a field.
    pub fn project<F: Fn(Point) -> f64>(&self, f: F) -> DGFunction {
        let exactness = (2 * self.degree + 6).min(20);
        let t = self.tables(exactness).expect("exactness within range");
        let mut u = self.zero();
        for (ci, c) in self.mesh.cells().iter().enumerate() {
            let s = (2.0 * c.area).sqrt();
            let b = &mut u.coeffs[ci * self.nloc..(ci + 1) * self.nloc];
            for q in 0..t.tri_rule.len() {
                let fx = f(c.map(t.tri_rule.points[q])) * t.tri_rule.weights[q] * s;
                for (bl, &phi) in b.iter_mut().zip(t.tri.val_at(q)) {
                    *bl += fx * phi;
                }
            }
        }
        u
    }

    /// L2 projection of a function living on another mesh of the same forest.
    pub fn project_function(&self, src: &DGFunction) -> Result<DGFunction> {
        let target = self.mesh.as_ref();
        let source = src.space.mesh();
        if !target.same_forest(source) {
            return Err(Error::IncompatibleForest);
        }
        if target.same_leaves(source) && src.space.degree == self.degree {
            let mut u = self.zero();
            for (ci, c) in target.cells().iter().enumerate() {
                let si = source.leaf_of_node(c.node).unwrap();
                u.coeffs[self.block(ci)].copy_from_slice(&src.coeffs[src.space.block(si)]);
            }
            return Ok(u);
        }
        let union = target.union(source)?;
        let to_target = union.parents_in(target)?;
        let to_source = union.parents_in(source)?;
        let exactness = (self.degree + src.space.degree).max(1);
        let rule = quadrature(QuadratureKind::Triangle, exactness)?;
        let mut u = self.zero();
        let mut tv = vec![0.0; self.nloc];
        for (ui, uc) in union.cells().iter().enumerate() {
            let tc = target.cell(to_target[ui]);
            let sc = source.cell(to_source[ui]);
            let st = 1.0 / (2.0 * tc.area).sqrt();
            let b = self.block(to_target[ui]);
            for (q, &r) in rule.points.iter().enumerate() {
                let x = uc.map(r);
                let w = rule.weights[q] * 2.0 * uc.area;
                let v = src.eval_in(to_source[ui], sc.inverse_map(x));
                self.basis.values_into(tc.inverse_map(x), &mut tv);
                for (l, &phi) in tv.iter().enumerate() {
                    u.coeffs[b.start + l] += w * v * phi * st;
                }
            }
        }
        Ok(u)
    }
}

/// Basis tables for one exactness: the triangle rule and the edge rule
/// traced along each local edge in both directions.
#[derive(Clone, Debug)]
pub struct Tables {
    pub tri_rule: QuadratureRule,
    pub tri: BasisTable,
    pub edge_rule: QuadratureRule,
    /// Indexed by `[local_edge][flip as usize]`.
    pub edge: Vec<[BasisTable; 2]>,
}

impl Tables {
    pub fn new(basis: &ReferenceBasis, exactness: usize) -> Result<Self> {
        let tri_rule = quadrature(QuadratureKind::Triangle, exactness)?;
        let edge_rule = quadrature(QuadratureKind::Edge, exactness)?;
        let tri = basis.tabulate(&tri_rule.points);
        let edge = (0..3u8)
            .map(|local| {
                let pts =
                    |flip| edge_rule.points.iter().map(|p| reference_edge_point(local, flip, p[0])).collect::<Vec<_>>();
                [basis.tabulate(&pts(false)), basis.tabulate(&pts(true))]
            })
            .collect();
        Ok(Tables { tri_rule, tri, edge_rule, edge })
    }

    pub fn edge_table(&self, local: u8, flip: bool) -> &BasisTable {
        &self.edge[local as usize][flip as usize]
    }
}

/// Physical basis values and gradients on one element at the points of a table.
pub fn physical_basis(cell: &Cell, table: &BasisTable, val: &mut Vec<f64>, grad: &mut Vec<[f64; 2]>) {
    let s = 1.0 / (2.0 * cell.area).sqrt();
    let ji = &cell.jinv;
    val.clear();
    grad.clear();
    val.extend(table.val.iter().map(|v| v * s));
    grad.extend(
        table.grad.iter().map(|g| [s * (ji[0][0] * g[0] + ji[1][0] * g[1]), s * (ji[0][1] * g[0] + ji[1][1] * g[1])]),
    );
}

/// Weights `G = J^{-1} A J^{-T}` such that `div(A grad phi) = G : H_ref`
/// for a constant tensor `A`, returned as `(xx, 2*xy, yy)`.
pub fn hessian_weights(cell: &Cell, a: &Tensor2) -> [f64; 3] {
    let ji = &cell.jinv;
    let mut g = [[0.0; 2]; 2];
    for (i, gi) in g.iter_mut().enumerate() {
        for (j, gij) in gi.iter_mut().enumerate() {
            let mut s = 0.0;
            for p in 0..2 {
                for q in 0..2 {
                    s += ji[i][p] * a[p][q] * ji[j][q];
                }
            }
            *gij = s;
        }
    }
    [g[0][0], g[0][1] + g[1][0], g[1][1]]
}

#[derive(Clone, Debug)]
pub struct DGFunction {
    pub space: DGSpace,
    pub coeffs: Vec<f64>,
}

impl DGFunction {
    pub fn block(&self, element: usize) -> &[f64] {
        &self.coeffs[self.space.block(element)]
    }

    fn check(&self, element: usize, p: Point) -> Result<[f64; 2]> {
        let c = self.space.mesh.cells().get(element).ok_or(Error::NotALeaf(element))?;
        let tol = 1e-10;
        if !c.contains(p, tol) {
            return Err(Error::PointOutsideElement { element, x: p[0], y: p[1] });
        }
        Ok(c.inverse_map(p))
    }

    /// Value at a reference point of `element`, without bounds checks.
    pub fn eval_in(&self, element: usize, r: [f64; 2]) -> f64 {
        let n = self.space.nloc;
        let mut v = [0.0; 28];
        self.space.basis.values_into(r, &mut v[..n]);
        let s = 1.0 / (2.0 * self.space.mesh.cell(element).area).sqrt();
        s * self.block(element).iter().zip(&v[..n]).map(|(c, p)| c * p).sum::<f64>()
    }

    pub fn eval(&self, element: usize, p: Point) -> Result<f64> {
        let r = self.check(element, p)?;
        Ok(self.eval_in(element, r))
    }

    pub fn eval_grad(&self, element: usize, p: Point) -> Result<[f64; 2]> {
        let r = self.check(element, p)?;
        let mut e = BasisEval::default();
        self.space.basis.eval_into(r, &mut e);
        let c = self.space.mesh.cell(element);
        let s = 1.0 / (2.0 * c.area).sqrt();
        let mut g = [0.0; 2];
        for (coef, gr) in self.block(element).iter().zip(&e.grad) {
            g[0] += coef * gr[0];
            g[1] += coef * gr[1];
        }
        let ji = &c.jinv;
        Ok([s * (ji[0][0] * g[0] + ji[1][0] * g[1]), s * (ji[0][1] * g[0] + ji[1][1] * g[1])])
    }

    pub fn eval_laplacian(&self, element: usize, p: Point) -> Result<f64> {
        let r = self.check(element, p)?;
        let mut e = BasisEval::default();
        self.space.basis.eval_into(r, &mut e);
        let c = self.space.mesh.cell(element);
        let s = 1.0 / (2.0 * c.area).sqrt();
        let w = hessian_weights(c, &crate::geometry::isotropic(1.0));
        Ok(s * self
            .block(element)
            .iter()
            .zip(&e.hess)
            .map(|(coef, h)| coef * (w[0] * h[0] + w[1] * h[1] + w[2] * h[2]))
            .sum::<f64>())
    }

    /// Mean value over `element`.
    pub fn cell_mean(&self, element: usize) -> f64 {
        self.block(element)[0] / self.space.mesh.cell(element).area.sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> DGFunction {
        DGFunction { space: self.space.clone(), coeffs: self.coeffs.iter().map(|c| c * factor).collect() }
    }

    /// `self - other` on the same space.
    pub fn minus(&self, other: &DGFunction) -> DGFunction {
        debug_assert_eq!(self.coeffs.len(), other.coeffs.len());
        DGFunction {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        }
    }

    /// Values at the three vertices of each element, element-major.
    pub fn vertex_values(&self) -> Vec<[f64; 3]> {
        const R: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        (0..self.space.mesh.num_cells())
            .map(|i| [self.eval_in(i, R[0]), self.eval_in(i, R[1]), self.eval_in(i, R[2])])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rect;

    fn space(n: usize, k: usize) -> DGSpace {
        DGSpace::new(Arc::new(Mesh::build_structured(Rect::unit(), n, n).unwrap()), k).unwrap()
    }

    #[test]
    fn paired_with_quadratics_gives_48_dofs() {
        assert_eq!(space(2, 2).dof(), 48);
    }

    #[test]
    fn constant_field() {
        let v = space(2, 2).project(|_| 3.5);
        for i in 0..8 {
            let c = v.space.mesh().cell(i).centroid();
            assert!((v.eval(i, c).unwrap() - 3.5).abs() < 1e-13);
            let g = v.eval_grad(i, c).unwrap();
            assert!(g[0].abs() < 1e-12 && g[1].abs() < 1e-12);
            assert!(v.eval_laplacian(i, c).unwrap().abs() < 1e-10);
            assert!((v.cell_mean(i) - 3.5).abs() < 1e-13);
        }
    }

    #[test]
    fn linear_and_quadratic_reproduction() {
        let v = space(2, 1).project(|p| p[0]);
        let g = v.eval_grad(3, v.space.mesh().cell(3).centroid()).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-12 && g[1].abs() < 1e-12);
        let s = space(3, 2);
        let q = s.project(|p| p[0] * p[0] + p[1] * p[1]);
        for i in 0..s.mesh().num_cells() {
            let c = s.mesh().cell(i).centroid();
            assert!((q.eval_laplacian(i, c).unwrap() - 4.0).abs() < 1e-9);
        }
    }

    #[test]
    fn outside_point_is_rejected() {
        let v = space(2, 1).zero();
        assert!(matches!(v.eval(0, [5.0, 5.0]), Err(Error::PointOutsideElement { .. })));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let s = DGSpace::new(Arc::new(Mesh::build_structured(Rect::unit(), 2, 2).unwrap().refine(&[1]).unwrap()), 3)
            .unwrap();
        let v = s.project(|p| (3.0 * p[0]).sin() * (2.0 * p[1]).exp());
        for i in 0..s.mesh().num_cells() {
            let c = s.mesh().cell(i);
            let x = c.centroid();
            let h = 1e-5 * c.diameter;
            let g = v.eval_grad(i, x).unwrap();
            for d in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[d] += h;
                xm[d] -= h;
                let fd = (v.eval(i, xp).unwrap() - v.eval(i, xm).unwrap()) / (2.0 * h);
                assert!((fd - g[d]).abs() <= 1e-6 * g[d].abs().max(1.0));
            }
        }
    }

    #[test]
    fn projection_reproduces_polynomials_and_nested_round_trip() {
        let s = space(2, 2);
        let f = |p: Point| 1.0 + 2.0 * p[0] - p[1] + 0.5 * p[0] * p[1] - p[1] * p[1];
        let u = s.project(f);
        let fine = s.on_mesh(Arc::new(s.mesh().refine_uniform(2).unwrap()));
        let uf = fine.project_function(&u).unwrap();
        let back = s.project_function(&uf).unwrap();
        let err = u.coeffs.iter().zip(&back.coeffs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
        let direct = fine.project(f);
        let err = uf.coeffs.iter().zip(&direct.coeffs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12);
        // Arbitrary u_h survives refine-then-restrict as well.
        let g = space(2, 2).project(|p| (5.0 * p[0]).cos() + p[1].powi(4));
        let gf = g.space.on_mesh(Arc::new(g.space.mesh().refine(&[0, 3]).unwrap()));
        let back = g.space.project_function(&gf.project_function(&g).unwrap()).unwrap();
        let err = g.coeffs.iter().zip(&back.coeffs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn projection_converges_at_order_k_plus_one() {
        let f = |p: Point| (std::f64::consts::PI * p[0]).sin() * (std::f64::consts::PI * p[1]).sin();
        let mut errs = Vec::new();
        for n in [2, 4, 8, 16] {
            let s = space(n, 2);
            let u = s.project(f);
            errs.push(crate::estimators::norms::l2_error(&u, f));
        }
        for w in errs.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!((2.7..=3.3).contains(&rate), "rate {rate}");
        }
    }

    #[test]
    fn mass_block_is_identity() {
        let s =
            DGSpace::new(Arc::new(Mesh::build_structured(Rect::new(0.0, 3.0, 0.0, 2.0), 3, 2).unwrap()), 2).unwrap();
        let t = s.tables(6).unwrap();
        let (mut v, mut g) = (Vec::new(), Vec::new());
        for c in s.mesh().cells() {
            physical_basis(c, &t.tri, &mut v, &mut g);
            let n = s.nloc();
            for i in 0..n {
                for j in 0..n {
                    let m: f64 = (0..t.tri_rule.len())
                        .map(|q| t.tri_rule.weights[q] * 2.0 * c.area * v[q * n + i] * v[q * n + j])
                        .sum();
                    assert!((m - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
                }
            }
        }
    }
}
