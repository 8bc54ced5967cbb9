//! Browser bindings for two small demos: a steady convection-diffusion solve
//! refined by its residual indicators, and the Darcy velocity of the
//! three-streak medium.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use dgadapt::adaptivity::{mark, Tolerances};
use dgadapt::assembly::Assembler;
use dgadapt::dg::space::{DGFunction, DGSpace};
use dgadapt::estimators::{stationary_indicator, Weights};
use dgadapt::geometry::{isotropic, Point, Rect};
use dgadapt::mesh::{BoundaryTags, Mesh, PointLocator};
use dgadapt::problems::{Component, PermeabilityField, Problem, RunDefaults};
use dgadapt::solver::darcy::darcy_solve;
use dgadapt::solver::{stationary_solve, LinearSolver, NewtonSettings};
use std::sync::Arc;
use wasm_bindgen::prelude::*;

fn js(e: dgadapt::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// `-eps lap u + beta . grad u = 1` on the unit square with `u = 0` on the
/// boundary.
fn layer_problem(eps: f64, beta: Point) -> Problem {
    Problem {
        name: "layer".into(),
        domain: Rect::unit(),
        boundary: BoundaryTags::default(),
        components: vec![Component {
            diffusion: Arc::new(move |_| isotropic(eps)),
            diffusion_min: eps,
            velocity: Arc::new(move |_, _| beta),
            velocity_div: Arc::new(|_, _| 0.0),
            source: Arc::new(|_, _| 1.0),
            dirichlet: Arc::new(|_, _| 0.0),
            initial: Arc::new(|_| 0.0),
            exact: None,
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
            nx: 4,
            ny: 4,
            tau0: 1.0,
            ttol: 1.0,
            stol_plus: 1.0,
            stol_minus: 0.0,
            max_level: 24,
        },
    }
}

fn flat_triangles(mesh: &Mesh) -> Vec<f64> {
    mesh.cells().iter().flat_map(|c| c.x.iter().flat_map(|p| [p[0], p[1]])).collect()
}

/// Steady boundary-layer problem on an adaptively refined mesh.
#[wasm_bindgen]
pub struct LayerDemo {
    problem: Problem,
    degree: usize,
    mesh: Mesh,
    solution: Option<DGFunction>,
    indicators: Vec<f64>,
}

impl LayerDemo {
    pub fn create(eps: f64, bx: f64, by: f64, degree: usize) -> dgadapt::Result<LayerDemo> {
        if !(eps > 0.0) {
            return Err(dgadapt::Error::InvalidArgument(format!("diffusion {eps} must be positive")));
        }
        let problem = layer_problem(eps, [bx, by]);
        let mesh = Mesh::build_structured(problem.domain, 4, 4)?.with_boundary(problem.boundary);
        let mut demo = LayerDemo { problem, degree, mesh, solution: None, indicators: Vec::new() };
        demo.resolve()?;
        Ok(demo)
    }

    fn resolve(&mut self) -> dgadapt::Result<()> {
        let space = DGSpace::new(Arc::new(self.mesh.clone()), self.degree)?;
        let asm = Assembler::new(&space, &self.problem)?;
        let s = asm.stiffness(0.0);
        let f = asm.load(0.0);
        let r = stationary_solve(
            &asm,
            &s,
            &f,
            vec![0.0; space.dof()],
            &NewtonSettings::default(),
            &mut LinearSolver::new(),
        )?;
        let u = space.from_coeffs(r.u)?;
        let w = Weights::new(self.problem.components[0].diffusion_min, 0.0, asm.penalty());
        let report = stationary_indicator(&self.problem, 0, std::slice::from_ref(&u), 0.0, &w)?;
        self.indicators = report.indicators.element_sq();
        self.solution = Some(u);
        Ok(())
    }

    /// Refines every element whose squared indicator exceeds `fraction`
    /// times the largest one. Returns the number of marked elements.
    pub fn refine_fraction(&mut self, fraction: f64) -> dgadapt::Result<usize> {
        let top = self.indicators.iter().cloned().fold(0.0, f64::max);
        let tol = Tolerances { ttol: 1.0, stol_plus: fraction * top, stol_minus: 0.0 };
        let (refine, _) = mark(&self.indicators, &tol);
        if refine.is_empty() {
            return Ok(0);
        }
        self.mesh = self.mesh.refine(&refine)?;
        self.resolve()?;
        Ok(refine.len())
    }

    /// Refines the element containing `(x, y)`, or with `coarsen` merges the
    /// patch around its newest vertex.
    pub fn edit_at(&mut self, x: f64, y: f64, coarsen: bool) -> dgadapt::Result<bool> {
        let Some(cell) = PointLocator::new(&self.mesh).locate(&self.mesh, [x, y]) else {
            return Ok(false);
        };
        let next = if coarsen {
            let newest = self.mesh.cell(cell).verts[0];
            let patch: Vec<usize> =
                (0..self.mesh.num_cells()).filter(|&i| self.mesh.cell(i).verts.contains(&newest)).collect();
            self.mesh.coarsen(&patch)
        } else {
            self.mesh.refine(&[cell])?
        };
        if next.num_cells() == self.mesh.num_cells() && coarsen {
            return Ok(false);
        }
        self.mesh = next;
        self.resolve()?;
        Ok(true)
    }

    pub fn estimate(&self) -> f64 {
        self.indicators.iter().sum::<f64>().sqrt()
    }
}

#[wasm_bindgen]
impl LayerDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(eps: f64, bx: f64, by: f64, degree: usize) -> Result<LayerDemo, JsError> {
        LayerDemo::create(eps, bx, by, degree).map_err(js)
    }

    #[wasm_bindgen(js_name = refineFraction)]
    pub fn refine_fraction_js(&mut self, fraction: f64) -> Result<usize, JsError> {
        self.refine_fraction(fraction).map_err(js)
    }

    #[wasm_bindgen(js_name = editAt)]
    pub fn edit_at_js(&mut self, x: f64, y: f64, coarsen: bool) -> Result<bool, JsError> {
        self.edit_at(x, y, coarsen).map_err(js)
    }

    /// Vertex coordinates, six numbers per triangle.
    pub fn triangles(&self) -> Vec<f64> {
        flat_triangles(&self.mesh)
    }

    /// Solution values at the three vertices of every triangle.
    #[wasm_bindgen(js_name = vertexValues)]
    pub fn vertex_values(&self) -> Vec<f64> {
        self.solution.as_ref().map_or_else(Vec::new, |u| u.vertex_values().into_iter().flatten().collect())
    }

    /// Squared element indicators.
    pub fn indicators(&self) -> Vec<f64> {
        self.indicators.clone()
    }

    #[wasm_bindgen(js_name = totalEstimate)]
    pub fn total_estimate(&self) -> f64 {
        self.estimate()
    }

    pub fn cells(&self) -> usize {
        self.mesh.num_cells()
    }

    pub fn dofs(&self) -> usize {
        self.solution.as_ref().map_or(0, |u| u.coeffs.len())
    }
}

/// Darcy velocity through three high-permeability streaks.
#[wasm_bindgen]
pub struct DarcyView {
    triangles: Vec<f64>,
    speeds: Vec<f64>,
    imbalance: f64,
    contrast: f64,
}

impl DarcyView {
    pub fn create(multiplier: f64, nx: usize, ny: usize) -> dgadapt::Result<DarcyView> {
        let domain = Rect::new(0.0, 3.0, 0.0, 2.0);
        let perm = PermeabilityField::three_streaks(0.06, multiplier, 0.4, 2.6, 0.2);
        let tags = BoundaryTags {
            left: dgadapt::mesh::BoundaryKind::Dirichlet,
            right: dgadapt::mesh::BoundaryKind::Dirichlet,
            bottom: dgadapt::mesh::BoundaryKind::Neumann,
            top: dgadapt::mesh::BoundaryKind::Neumann,
        };
        let mesh = Mesh::build_structured(domain, nx, ny)?.with_boundary(tags);
        let sol = darcy_solve(mesh, &|x| perm.at(x), 0.1, 1.0, 0.0)?;
        let m = sol.mesh();
        let speeds = m
            .cells()
            .iter()
            .map(|c| {
                let v = sol.velocity_at(c.centroid());
                v[0].hypot(v[1])
            })
            .collect();
        let (inflow, outflow) = sol.boundary_fluxes();
        Ok(DarcyView {
            triangles: flat_triangles(m),
            speeds,
            imbalance: (inflow - outflow).abs() / inflow.abs().max(f64::MIN_POSITIVE),
            contrast: sol.speed_contrast(),
        })
    }
}

#[wasm_bindgen]
impl DarcyView {
    #[wasm_bindgen(constructor)]
    pub fn new(multiplier: f64, nx: usize, ny: usize) -> Result<DarcyView, JsError> {
        DarcyView::create(multiplier, nx, ny).map_err(js)
    }

    pub fn triangles(&self) -> Vec<f64> {
        self.triangles.clone()
    }

    /// Speed at the centroid of every triangle.
    pub fn speeds(&self) -> Vec<f64> {
        self.speeds.clone()
    }

    /// Relative mismatch of inflow and outflow.
    pub fn imbalance(&self) -> f64 {
        self.imbalance
    }

    /// Mean speed in the streaks over the mean speed outside.
    pub fn contrast(&self) -> f64 {
        self.contrast
    }
}
