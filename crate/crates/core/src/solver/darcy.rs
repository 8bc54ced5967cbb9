//! Pressure solve `-div((k/mu) grad p) = 0` and the derived transport
//! velocity.

use super::linear::linear_solve;
use crate::assembly::{max_eigenvalue, Assembler, Penalty};
use crate::dg::space::{DGFunction, DGSpace};
use crate::error::{Error, Result};
use crate::geometry::{isotropic, Point, Tensor2};
use crate::mesh::{BoundaryTags, EdgeKind, Mesh, PointLocator};
use crate::problems::{Component, Problem, RunDefaults};
use std::sync::Arc;

const ON_EDGE_TOL: f64 = 1e-10;

/// Pressure field and the velocity `-(k/mu) grad p`. On edges the velocity
/// is the numerical flux of the pressure scheme, which makes it exactly
/// conservative element by element.
pub struct DarcySolution {
    pub pressure: DGFunction,
    /// `k/mu` per pressure element.
    pub mobility: Vec<f64>,
    penalty: Penalty,
    dirichlet: [f64; 2],
    locator: PointLocator,
}

impl std::fmt::Debug for DarcySolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DarcySolution").field("cells", &self.mobility.len()).finish()
    }
}

/// Solves for the pressure with `p = p_left` at `x = x0`, `p = p_right` at
/// `x = x1` and the boundary kinds of `mesh` elsewhere. The permeability is
/// sampled at element centroids.
pub fn darcy_solve(
    mesh: Mesh,
    permeability: &dyn Fn(Point) -> f64,
    viscosity: f64,
    p_left: f64,
    p_right: f64,
) -> Result<DarcySolution> {
    if !(viscosity > 0.0) {
        return Err(Error::InvalidArgument(format!("viscosity {viscosity} must be positive")));
    }
    let mobility: Vec<f64> = mesh.cells().iter().map(|c| permeability(c.centroid()) / viscosity).collect();
    if let Some(k) = mobility.iter().find(|k| !(**k > 0.0)) {
        return Err(Error::InvalidArgument(format!("permeability must be positive, got {}", k * viscosity)));
    }
    let domain = mesh.domain();
    let boundary = mesh.boundary();
    let xmid = 0.5 * (domain.x0 + domain.x1);
    let space = DGSpace::new(Arc::new(mesh), 1)?;
    let problem = pressure_problem(domain, boundary, xmid, p_left, p_right);
    let tensors: Vec<Tensor2> = mobility.iter().map(|&k| isotropic(k)).collect();
    let asm = Assembler::new(&space, &problem)?.with_cell_diffusion(tensors);
    let s = asm.stiffness(0.0);
    let f = asm.load(0.0);
    let p = linear_solve(&s, &f)?;
    let penalty = asm.penalty();
    let locator = PointLocator::new(space.mesh());
    Ok(DarcySolution { pressure: space.from_coeffs(p)?, mobility, penalty, dirichlet: [p_left, p_right], locator })
}

fn pressure_problem(domain: crate::geometry::Rect, boundary: BoundaryTags, xmid: f64, pl: f64, pr: f64) -> Problem {
    Problem {
        name: "darcy".into(),
        domain,
        boundary,
        components: vec![Component {
            diffusion: Arc::new(|_| isotropic(1.0)),
            diffusion_min: 1.0,
            velocity: Arc::new(|_, _| [0.0, 0.0]),
            velocity_div: Arc::new(|_, _| 0.0),
            source: Arc::new(|_, _| 0.0),
            dirichlet: Arc::new(move |x, _| if x[0] < xmid { pl } else { pr }),
            initial: Arc::new(|_| 0.0),
            exact: None,
        }],
        reaction: Arc::new(|_, r, d| {
            r[0] = 0.0;
            d[0] = 0.0;
            Ok(())
        }),
        kappa: 0.0,
        final_time: 0.0,
        static_velocity: true,
        defaults: RunDefaults {
            degree: 1,
            nx: 1,
            ny: 1,
            tau0: 1.0,
            ttol: 1.0,
            stol_plus: 1.0,
            stol_minus: 0.0,
            max_level: 24,
        },
    }
}

impl DarcySolution {
    pub fn mesh(&self) -> &Mesh {
        self.pressure.space.mesh()
    }

    fn boundary_value(&self, x: Point) -> f64 {
        let d = self.mesh().domain();
        if x[0] < 0.5 * (d.x0 + d.x1) {
            self.dirichlet[0]
        } else {
            self.dirichlet[1]
        }
    }

    fn cell_velocity(&self, c: usize, x: Point) -> Point {
        let g = self
            .pressure
            .eval_grad(c, x)
            .unwrap_or_else(|_| self.pressure.eval_grad(c, self.mesh().cell(c).centroid()).unwrap());
        [-self.mobility[c] * g[0], -self.mobility[c] * g[1]]
    }

    /// Velocity on edge `e` at `x`: the numerical flux of the pressure scheme.
    pub fn edge_velocity(&self, e: usize, x: Point) -> Point {
        let mesh = self.mesh();
        let edge = mesh.edge(e);
        let n = edge.normal;
        let vl = self.cell_velocity(edge.left, x);
        let pl = self.pressure.eval(edge.left, x).unwrap_or(0.0);
        match (edge.kind, edge.right) {
            (EdgeKind::Interior, Some(r)) => {
                let vr = self.cell_velocity(r, x);
                let pr = self.pressure.eval(r, x).unwrap_or(0.0);
                let ke = max_eigenvalue(&isotropic(0.5 * (self.mobility[edge.left] + self.mobility[r])));
                let pen = self.penalty.interior * ke / edge.length * (pl - pr);
                [0.5 * (vl[0] + vr[0]) + pen * n[0], 0.5 * (vl[1] + vr[1]) + pen * n[1]]
            }
            (EdgeKind::Dirichlet, _) => {
                let pen =
                    self.penalty.boundary * self.mobility[edge.left] / edge.length * (pl - self.boundary_value(x));
                [vl[0] + pen * n[0], vl[1] + pen * n[1]]
            }
            _ => {
                let vn = vl[0] * n[0] + vl[1] * n[1];
                [vl[0] - vn * n[0], vl[1] - vn * n[1]]
            }
        }
    }

    pub fn velocity_at(&self, x: Point) -> Point {
        let mesh = self.mesh();
        let Some(c) = self.locator.locate(mesh, x) else {
            return [0.0, 0.0];
        };
        let cell = mesh.cell(c);
        let r = cell.inverse_map(x);
        let bary = [1.0 - r[0] - r[1], r[0], r[1]];
        for (local, &b) in bary.iter().enumerate() {
            if b.abs() <= ON_EDGE_TOL {
                return self.edge_velocity(mesh.cell_edges(c)[local], x);
            }
        }
        self.cell_velocity(c, x)
    }

    /// Mean centroid speed in the most permeable elements over the mean in
    /// the least permeable ones.
    pub fn speed_contrast(&self) -> f64 {
        let mesh = self.mesh();
        let kmax = self.mobility.iter().cloned().fold(f64::MIN, f64::max);
        let kmin = self.mobility.iter().cloned().fold(f64::MAX, f64::min);
        let mean_speed = |k: f64| {
            let (mut s, mut n) = (0.0, 0);
            for (i, c) in mesh.cells().iter().enumerate() {
                if self.mobility[i] == k {
                    let v = self.cell_velocity(i, c.centroid());
                    s += v[0].hypot(v[1]);
                    n += 1;
                }
            }
            s / n as f64
        };
        mean_speed(kmax) / mean_speed(kmin)
    }

    /// Net outward flux `int_{dK} u.n ds` of every element, by Gauss
    /// quadrature on the edges.
    pub fn element_flux_balance(&self) -> Vec<f64> {
        let mesh = self.mesh();
        let rule =
            crate::dg::quadrature::quadrature(crate::dg::quadrature::QuadratureKind::Edge, 4).expect("edge rule");
        let mut bal = vec![0.0; mesh.num_cells()];
        for (ei, e) in mesh.edges().iter().enumerate() {
            let mut flux = 0.0;
            for (q, w) in rule.points.iter().zip(&rule.weights) {
                let x = e.point(q[0]);
                let v = self.edge_velocity(ei, x);
                flux += w * e.length * (v[0] * e.normal[0] + v[1] * e.normal[1]);
            }
            bal[e.left] += flux;
            if let Some(r) = e.right {
                bal[r] -= flux;
            }
        }
        bal
    }

    /// Total flux through the Dirichlet part of the boundary at `x = x0`
    /// (inflow, counted positive) and at `x = x1` (outflow).
    pub fn boundary_fluxes(&self) -> (f64, f64) {
        let mesh = self.mesh();
        let d = mesh.domain();
        let rule =
            crate::dg::quadrature::quadrature(crate::dg::quadrature::QuadratureKind::Edge, 4).expect("edge rule");
        let (mut inflow, mut outflow) = (0.0, 0.0);
        for (ei, e) in mesh.edges().iter().enumerate().filter(|(_, e)| e.kind.is_boundary()) {
            let mut flux = 0.0;
            for (q, w) in rule.points.iter().zip(&rule.weights) {
                let v = self.edge_velocity(ei, e.point(q[0]));
                flux += w * e.length * (v[0] * e.normal[0] + v[1] * e.normal[1]);
            }
            let xm = 0.5 * (e.x[0][0] + e.x[1][0]);
            if (xm - d.x0).abs() < 1e-12 {
                inflow -= flux;
            } else if (xm - d.x1).abs() < 1e-12 {
                outflow += flux;
            }
        }
        (inflow, outflow)
    }
}
