//! Newton iteration for backward Euler steps and stationary problems.

use super::linear::{norm, LinearSolver};
use crate::assembly::{Assembler, BlockMatrix};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonSettings {
    /// Absolute tolerance, scaled by the square root of the system size.
    pub abs_tol: f64,
    /// Required reduction relative to the initial residual.
    pub rel_tol: f64,
    pub max_iterations: usize,
    pub damping: bool,
    pub max_halvings: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        NewtonSettings { abs_tol: 1e-10, rel_tol: 1e-10, max_iterations: 25, damping: true, max_halvings: 8 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonIterate {
    pub residual: f64,
    pub halvings: usize,
}

#[derive(Clone, Debug)]
pub struct StepResult {
    pub u: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    /// Residual before the first update followed by one entry per iteration.
    pub history: Vec<NewtonIterate>,
}

/// Time-stepping part of the residual: `M (u - w)`.
pub struct MassTerm<'m> {
    pub mass: &'m BlockMatrix,
    pub previous: &'m [f64],
}

struct System<'s, 'a> {
    asm: &'s Assembler<'a>,
    mass: Option<MassTerm<'s>>,
    tau: f64,
    stiffness: &'s BlockMatrix,
    load: &'s [f64],
}

impl System<'_, '_> {
    fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        let su = self.stiffness.matvec(u);
        let b = self.asm.reaction_vector(u)?;
        let mut r: Vec<f64> = (0..u.len()).map(|i| self.tau * (su[i] + b[i] - self.load[i])).collect();
        if let Some(m) = &self.mass {
            let d: Vec<f64> = u.iter().zip(m.previous).map(|(a, b)| a - b).collect();
            for (ri, v) in r.iter_mut().zip(m.mass.matvec(&d)) {
                *ri += v;
            }
        }
        Ok(r)
    }

    fn jacobian(&self, u: &[f64]) -> Result<BlockMatrix> {
        let (_, jb) = self.asm.reaction(u)?;
        let mut j = self.stiffness.clone();
        j.add_scaled(&jb, 1.0);
        j.scale(self.tau);
        if let Some(m) = &self.mass {
            j.add_scaled(m.mass, 1.0);
        }
        Ok(j)
    }
}

fn newton(sys: System, guess: Vec<f64>, settings: &NewtonSettings, linear: &mut LinearSolver) -> Result<StepResult> {
    let mut u = guess;
    let mut r = sys.residual(&u)?;
    let mut rn = norm(&r);
    let r0 = rn;
    let tol = (settings.abs_tol * (u.len() as f64).sqrt()).max(settings.rel_tol * r0);
    let mut history = vec![NewtonIterate { residual: rn, halvings: 0 }];
    let mut iterations = 0;
    while rn > tol {
        if iterations == settings.max_iterations {
            return Err(Error::NewtonDivergence {
                iterations,
                residual: rn,
                history: history.iter().map(|h| h.residual).collect(),
            });
        }
        iterations += 1;
        let j = sys.jacobian(&u)?;
        let minus_r: Vec<f64> = r.iter().map(|v| -v).collect();
        let delta = linear.solve(&j, &minus_r)?;
        let mut lambda = 1.0;
        let mut halvings = 0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + lambda * d).collect();
            let tr = sys.residual(&trial);
            let accept = match &tr {
                Ok(t) => !settings.damping || norm(t) <= rn,
                Err(_) => false,
            };
            if accept {
                r = tr?;
                rn = norm(&r);
                u = trial;
                break;
            }
            if !settings.damping || halvings == settings.max_halvings {
                tr?;
                return Err(Error::NewtonDivergence {
                    iterations,
                    residual: rn,
                    history: history.iter().map(|h| h.residual).collect(),
                });
            }
            lambda *= 0.5;
            halvings += 1;
        }
        history.push(NewtonIterate { residual: rn, halvings });
    }
    Ok(StepResult { u, iterations, residual: rn, converged: true, history })
}

/// One backward Euler step: solves `M (u - w) + tau (S u + b(u) - f) = 0`
/// starting from `w`.
#[allow(clippy::too_many_arguments)]
pub fn backward_euler_step(
    asm: &Assembler,
    mass: &BlockMatrix,
    stiffness: &BlockMatrix,
    load: &[f64],
    previous: &[f64],
    tau: f64,
    settings: &NewtonSettings,
    linear: &mut LinearSolver,
) -> Result<StepResult> {
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!("time step {tau} must be positive")));
    }
    let sys = System { asm, mass: Some(MassTerm { mass, previous }), tau, stiffness, load };
    newton(sys, previous.to_vec(), settings, linear)
}

/// Solves `S u + b(u) = f`.
pub fn stationary_solve(
    asm: &Assembler,
    stiffness: &BlockMatrix,
    load: &[f64],
    guess: Vec<f64>,
    settings: &NewtonSettings,
    linear: &mut LinearSolver,
) -> Result<StepResult> {
    let sys = System { asm, mass: None, tau: 1.0, stiffness, load };
    newton(sys, guess, settings, linear)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dg::space::DGSpace;
    use crate::geometry::{isotropic, Point, Rect};
    use crate::mesh::{BoundaryTags, Mesh};
    use crate::problems::{Component, Problem, Reaction, RunDefaults};
    use std::sync::Arc;

    fn problem(reaction: Reaction, source: f64) -> Problem {
        Problem {
            name: "t".into(),
            domain: Rect::unit(),
            boundary: BoundaryTags::default(),
            components: vec![Component {
                diffusion: Arc::new(|_| isotropic(0.1)),
                diffusion_min: 0.1,
                velocity: Arc::new(|_, _| [1.0, 0.5]),
                velocity_div: Arc::new(|_, _| 0.0),
                source: Arc::new(move |_, _| source),
                dirichlet: Arc::new(|_, _| 0.0),
                initial: Arc::new(|_| 0.0),
                exact: None,
            }],
            reaction,
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

    fn zero_reaction() -> Reaction {
        Arc::new(|_, r, d| {
            r.iter_mut().for_each(|v| *v = 0.0);
            d.iter_mut().for_each(|v| *v = 0.0);
            Ok(())
        })
    }

    fn step(p: &Problem, s: &DGSpace, prev: &[f64], tau: f64) -> StepResult {
        let a = Assembler::new(s, p).unwrap();
        let m = a.mass();
        let st = a.stiffness(tau);
        let f = a.load(tau);
        backward_euler_step(&a, &m, &st, &f, prev, tau, &NewtonSettings::default(), &mut LinearSolver::new()).unwrap()
    }

    #[test]
    fn zero_fixed_point() {
        let s = space(2, 1);
        let p = problem(zero_reaction(), 0.0);
        let r = step(&p, &s, &vec![0.0; s.dof()], 0.1);
        assert!(r.iterations <= 1 && r.u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_reaction_takes_one_iteration() {
        let s = space(2, 2);
        let p = problem(
            Arc::new(|u, r, d| {
                r[0] = u[0];
                d[0] = 1.0;
                Ok(())
            }),
            1.0,
        );
        let r = step(&p, &s, &vec![0.0; s.dof()], 0.1);
        assert_eq!(r.iterations, 1);
        assert!(r.converged);
    }

    #[test]
    fn quartic_reaction_converges_quadratically_without_residual_growth() {
        let m = Mesh::build_structured(Rect::unit(), 8, 8).unwrap();
        assert_eq!(m.num_cells(), 128);
        let s = DGSpace::new(Arc::new(m), 1).unwrap();
        let p = problem(
            Arc::new(|u, r, d| {
                r[0] = u[0].powi(4);
                d[0] = 4.0 * u[0].powi(3);
                Ok(())
            }),
            50.0,
        );
        let prev = s.project(|x: Point| 3.0 * x[0] * (1.0 - x[0]));
        let r = step(&p, &s, &prev.coeffs, 0.5);
        assert!(r.iterations >= 2);
        for w in r.history.windows(2) {
            assert!(w[1].residual <= w[0].residual);
            if w[0].residual < 1e-2 && w[1].residual > 1e-12 {
                assert!(w[1].residual <= 10.0 * w[0].residual.powi(2), "{:?}", r.history);
            }
        }
    }

    #[test]
    fn first_order_in_time() {
        // du/dt = -u on a space-constant field with homogeneous Neumann data
        // has one-step error O(tau^2) per step; halving tau over a fixed
        // interval halves the accumulated error.
        let s = space(2, 1);
        let mut p = problem(
            Arc::new(|u, r, d| {
                r[0] = u[0];
                d[0] = 1.0;
                Ok(())
            }),
            0.0,
        );
        p.boundary = BoundaryTags::all(crate::mesh::BoundaryKind::Neumann);
        p.components[0].velocity = Arc::new(|_, _| [0.0, 0.0]);
        let s = s.on_mesh(Arc::new(s.mesh().with_boundary(p.boundary)));
        let err = |n: usize| {
            let tau = 0.4 / n as f64;
            let mut u = s.project(|_| 1.0).coeffs;
            for _ in 0..n {
                u = step(&p, &s, &u, tau).u;
            }
            let v = s.from_coeffs(u).unwrap().eval(0, s.mesh().cell(0).centroid()).unwrap();
            (v - (-0.4f64).exp()).abs()
        };
        let ratio = err(4) / err(8);
        assert!((1.8..=2.2).contains(&ratio), "{ratio}");
    }
}
