//! Problem descriptions: coefficients, data, reaction terms and benchmark
//! definitions.

mod benchmarks;

pub use benchmarks::{
    example1, example2, example3, example4, Example1Params, Example2Params, Example3Params, Example4Params,
    PermeabilityField, Streak,
};

use crate::geometry::{Point, Rect, Tensor2};
use crate::mesh::BoundaryTags;
use std::sync::Arc;

pub type Field = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(Point, f64) -> Point + Send + Sync>;
pub type TensorField = Arc<dyn Fn(Point) -> Tensor2 + Send + Sync>;
pub type InitialField = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// Reaction `r(u)` of a `J`-component system: writes `r_i(u)` into `value`
/// and `dr_i/du_j` into `jac[i*J + j]`.
pub type Reaction = Arc<dyn Fn(&[f64], &mut [f64], &mut [f64]) -> Result<(), String> + Send + Sync>;

#[derive(Clone)]
pub struct ExactSolution {
    pub value: Field,
    pub grad: VectorField,
}

/// Data of one scalar component of the system.
#[derive(Clone)]
pub struct Component {
    pub diffusion: TensorField,
    /// Lower bound of the diffusion eigenvalues, used in estimator weights.
    pub diffusion_min: f64,
    pub velocity: VectorField,
    pub velocity_div: Field,
    pub source: Field,
    pub dirichlet: Field,
    pub initial: InitialField,
    pub exact: Option<ExactSolution>,
}

#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub domain: Rect,
    pub boundary: BoundaryTags,
    pub components: Vec<Component>,
    pub reaction: Reaction,
    pub kappa: f64,
    pub final_time: f64,
    /// Velocity does not depend on time, so operators can be cached per mesh.
    pub static_velocity: bool,
    pub defaults: RunDefaults,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("components", &self.components.len())
            .field("kappa", &self.kappa)
            .field("final_time", &self.final_time)
            .finish()
    }
}

/// Suggested discretisation and tolerances for a benchmark.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunDefaults {
    pub degree: usize,
    pub nx: usize,
    pub ny: usize,
    pub tau0: f64,
    pub ttol: f64,
    pub stol_plus: f64,
    pub stol_minus: f64,
    /// Elements at this refinement level are not refined further.
    pub max_level: u32,
}

impl Problem {
    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn has_exact(&self) -> bool {
        self.components.iter().all(|c| c.exact.is_some())
    }

    /// Evaluates the reaction at a single state.
    pub fn reaction_at(&self, u: &[f64]) -> Result<(Vec<f64>, Vec<f64>), String> {
        let j = u.len();
        let mut r = vec![0.0; j];
        let mut d = vec![0.0; j * j];
        (self.reaction)(u, &mut r, &mut d)?;
        Ok((r, d))
    }

    /// Finite-difference residual `u_t - div(eps grad u) + beta.grad u + r(u) - f`
    /// of the exact solution for component `i`, normalised by the size of the
    /// individual terms (at least 1e-6). `h` is the spatial step; the time step is `h` as well.
    pub fn exact_residual(&self, i: usize, x: Point, t: f64, h: f64) -> Option<f64> {
        let comps: Vec<&ExactSolution> = self.components.iter().map(|c| c.exact.as_ref()).collect::<Option<_>>()?;
        let c = &self.components[i];
        let u = |p: Point, s: f64| (comps[i].value)(p, s);
        let ut = (u(x, t + h) - u(x, t - h)) / (2.0 * h);
        let e = (c.diffusion)(x);
        let du = |p: Point, d: usize| {
            let mut a = p;
            let mut b = p;
            a[d] += h;
            b[d] -= h;
            (u(a, t) - u(b, t)) / (2.0 * h)
        };
        // div(eps grad u) by nested central differences of the flux.
        let flux = |p: Point, d: usize| e[d][0] * du(p, 0) + e[d][1] * du(p, 1);
        let mut div = 0.0;
        for d in 0..2 {
            let mut a = x;
            let mut b = x;
            a[d] += h;
            b[d] -= h;
            div += (flux(a, d) - flux(b, d)) / (2.0 * h);
        }
        let beta = (c.velocity)(x, t);
        let conv = beta[0] * du(x, 0) + beta[1] * du(x, 1);
        let state: Vec<f64> = comps.iter().map(|s| (s.value)(x, t)).collect();
        let (r, _) = self.reaction_at(&state).ok()?;
        let f = (c.source)(x, t);
        let res = ut - div + conv + r[i] - f;
        let scale = ut.abs() + div.abs() + conv.abs() + r[i].abs() + f.abs();
        Some(res.abs() / scale.max(1e-6))
    }
}

/// Builds a problem by name with default parameters.
pub fn by_name(name: &str) -> Option<Problem> {
    match name {
        "ex1" => Some(example1(&Example1Params::default())),
        "ex2" => Some(example2(&Example2Params::default())),
        "ex3" => Some(example3(&Example3Params::default())),
        "ex4" => example4(&Example4Params::default()).ok().map(|(p, _)| p),
        _ => None,
    }
}

pub const PROBLEM_NAMES: [&str; 4] = ["ex1", "ex2", "ex3", "ex4"];
