//! Checks shared by the property tests and the acceptance suite. Each check
//! returns a description of the first violation.

#![allow(dead_code)]

use dgadapt::adaptivity::{mark_coupled, Tolerances};
use dgadapt::assembly::{Assembler, Penalty};
use dgadapt::dg::space::{DGFunction, DGSpace};
use dgadapt::estimators::norms::{energy_norm, jump_seminorm_part, l2_error, l2_norm};
use dgadapt::estimators::{stationary_indicator, Weights};
use dgadapt::geometry::{isotropic, Point, Rect};
use dgadapt::mesh::{BoundaryTags, Mesh};
use dgadapt::problems::{Component, ExactSolution, Problem, RunDefaults};
use dgadapt::solver::{stationary_solve, LinearSolver, NewtonSettings};
use std::sync::Arc;

pub type Check = Result<(), String>;

pub fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Quadratic `c0 + c1 x + c2 y + c3 x^2 + c4 xy + c5 y^2`.
#[derive(Clone, Copy, Debug)]
pub struct Quadratic(pub [f64; 6]);

impl Quadratic {
    pub fn value(&self, x: Point) -> f64 {
        let c = self.0;
        c[0] + c[1] * x[0] + c[2] * x[1] + c[3] * x[0] * x[0] + c[4] * x[0] * x[1] + c[5] * x[1] * x[1]
    }

    pub fn grad(&self, x: Point) -> Point {
        let c = self.0;
        [c[1] + 2.0 * c[3] * x[0] + c[4] * x[1], c[2] + c[4] * x[0] + 2.0 * c[5] * x[1]]
    }

    pub fn laplacian(&self) -> f64 {
        2.0 * (self.0[3] + self.0[5])
    }
}

/// Stationary linear problem whose exact solution is `q`.
pub fn quadratic_problem(q: Quadratic, eps: f64, beta: Point) -> Problem {
    let source = Arc::new(move |x: Point, _t: f64| {
        let g = q.grad(x);
        -eps * q.laplacian() + beta[0] * g[0] + beta[1] * g[1]
    });
    Problem {
        name: "quadratic".into(),
        domain: Rect::unit(),
        boundary: BoundaryTags::default(),
        components: vec![Component {
            diffusion: Arc::new(move |_| isotropic(eps)),
            diffusion_min: eps,
            velocity: Arc::new(move |_, _| beta),
            velocity_div: Arc::new(|_, _| 0.0),
            source,
            dirichlet: Arc::new(move |x, _| q.value(x)),
            initial: Arc::new(move |x| q.value(x)),
            exact: Some(ExactSolution {
                value: Arc::new(move |x, _| q.value(x)),
                grad: Arc::new(move |x, _| q.grad(x)),
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
            degree: 2,
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

/// Structured unit-square mesh refined at the leaves picked by `marks`
/// (taken modulo the current leaf count), one round per entry.
pub fn refined_mesh(n: usize, marks: &[Vec<usize>]) -> Mesh {
    let mut m = Mesh::build_structured(Rect::unit(), n, n).unwrap();
    for round in marks {
        let picked: Vec<usize> = round.iter().map(|i| i % m.num_cells()).collect();
        m = m.refine(&picked).unwrap();
    }
    m
}

/// The discrete solution reproduces a quadratic exact solution.
pub fn patch_test(mesh: &Mesh, q: Quadratic, eps: f64, beta: Point) -> Check {
    let p = quadratic_problem(q, eps, beta);
    let space = DGSpace::new(Arc::new(mesh.with_boundary(p.boundary)), 2).map_err(|e| e.to_string())?;
    let asm = Assembler::new(&space, &p).map_err(|e| e.to_string())?;
    let s = asm.stiffness(0.0);
    let f = asm.load(0.0);
    let res =
        stationary_solve(&asm, &s, &f, vec![0.0; space.dof()], &NewtonSettings::default(), &mut LinearSolver::new())
            .map_err(|e| e.to_string())?;
    let uh = space.from_coeffs(res.u).map_err(|e| e.to_string())?;
    let err = l2_error(&uh, |x| q.value(x));
    let scale = l2_norm(&space.project(|x| q.value(x))).max(1.0);
    ensure(err <= 1e-10 * scale, || format!("patch test error {err:e}"))
}

pub fn symmetric_without_convection(mesh: &Mesh, eps: f64, k: usize) -> Check {
    let p = quadratic_problem(Quadratic([0.0; 6]), eps, [0.0, 0.0]);
    let space = DGSpace::new(Arc::new(mesh.clone()), k).map_err(|e| e.to_string())?;
    let s = Assembler::new(&space, &p).map_err(|e| e.to_string())?.stiffness(0.0);
    let asym = s.asymmetry();
    ensure(asym <= 1e-12 * s.max_abs().max(1.0), || format!("asymmetry {asym:e}"))
}

/// `x^T M x` matches the squared L2 norm of the corresponding function and is
/// positive for a nonzero vector.
pub fn mass_spd(mesh: &Mesh, k: usize, coeffs: &[f64]) -> Check {
    let p = quadratic_problem(Quadratic([0.0; 6]), 1.0, [0.0, 0.0]);
    let space = DGSpace::new(Arc::new(mesh.clone()), k).map_err(|e| e.to_string())?;
    let m = Assembler::new(&space, &p).map_err(|e| e.to_string())?.mass();
    let x: Vec<f64> = (0..space.dof()).map(|i| coeffs[i % coeffs.len()]).collect();
    let mx = m.matvec(&x);
    let quad: f64 = x.iter().zip(&mx).map(|(a, b)| a * b).sum();
    let u = space.from_coeffs(x.clone()).map_err(|e| e.to_string())?;
    let direct = l2_norm(&u).powi(2);
    ensure(m.asymmetry() <= 1e-14, || format!("mass asymmetry {:e}", m.asymmetry()))?;
    ensure((quad - direct).abs() <= 1e-12 * direct.max(1e-300), || format!("x^T M x = {quad} vs {direct}"))?;
    let nonzero = x.iter().any(|&v| v != 0.0);
    ensure(!nonzero || quad > 0.0, || format!("x^T M x = {quad} for a nonzero vector"))
}

pub fn conforming(mesh: &Mesh, domain_area: f64) -> Check {
    let hanging = mesh.hanging_nodes();
    ensure(hanging.is_empty(), || format!("{} hanging nodes", hanging.len()))?;
    let area = mesh.total_area();
    ensure((area - domain_area).abs() <= 1e-12 * domain_area, || format!("area {area} vs {domain_area}"))?;
    ensure(mesh.cells().iter().all(|c| c.area > 0.0), || "non-positive cell area".into())?;
    for e in mesh.edges() {
        ensure(e.right.is_some() != e.kind.is_boundary(), || format!("edge {:?} has inconsistent kind", e.x))?;
    }
    Ok(())
}

/// Coarsening everything repeatedly restores the initial leaves.
pub fn round_trip(initial: &Mesh, refined: &Mesh) -> Check {
    let mut m = refined.clone();
    for _ in 0..200 {
        if m.same_leaves(initial) {
            return Ok(());
        }
        let all: Vec<usize> = (0..m.num_cells()).collect();
        let next = m.coarsen(&all);
        if next.num_cells() == m.num_cells() {
            break;
        }
        m = next;
    }
    ensure(m.same_leaves(initial), || format!("stuck at {} cells, initial {}", m.num_cells(), initial.num_cells()))
}

/// Relative finite-difference check of the reaction Jacobian at `u`.
pub fn jacobian_matches_fd(p: &Problem, u: &[f64]) -> Check {
    let j = u.len();
    let (_, d) = p.reaction_at(u).map_err(|e| e.to_string())?;
    for col in 0..j {
        let h = 1e-6 * u[col].abs().max(1.0);
        let mut up = u.to_vec();
        let mut um = u.to_vec();
        up[col] += h;
        um[col] -= h;
        let (rp, _) = p.reaction_at(&up).map_err(|e| e.to_string())?;
        let (rm, _) = p.reaction_at(&um).map_err(|e| e.to_string())?;
        for row in 0..j {
            let fd = (rp[row] - rm[row]) / (2.0 * h);
            let an = d[row * j + col];
            let scale = an.abs().max(fd.abs()).max(1e-3);
            ensure((fd - an).abs() <= 1e-5 * scale, || {
                format!("{}: d r{row}/d u{col} = {an} vs fd {fd} at {u:?}", p.name)
            })?;
        }
    }
    Ok(())
}

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()) + 1e-300
}

/// Norms scale with `|s|` (squared parts with `s^2`).
pub fn norms_homogeneous(v: &DGFunction, s: f64) -> Check {
    let comp = quadratic_problem(Quadratic([0.0; 6]), 0.3, [1.0, 0.5]).components.remove(0);
    let pen = Penalty::for_degree(v.space.degree());
    let w = v.scaled(s);
    let a = s.abs();
    ensure(rel_close(l2_norm(&w), a * l2_norm(v)), || "l2 norm".into())?;
    ensure(rel_close(energy_norm(&w, &comp, 0.5, pen), a * energy_norm(v, &comp, 0.5, pen)), || "energy norm".into())?;
    ensure(rel_close(jump_seminorm_part(&w, 0.3, 0.5), s * s * jump_seminorm_part(v, 0.3, 0.5)), || "jump part".into())
}

/// With homogeneous data the stationary indicator is absolutely homogeneous.
pub fn indicator_homogeneous(v: &DGFunction, s: f64) -> Check {
    let p = quadratic_problem(Quadratic([0.0; 6]), 0.05, [1.0, 0.5]);
    let w = Weights::new(0.05, 0.0, Penalty::for_degree(v.space.degree()));
    let v = DGFunction {
        space: DGSpace::new(Arc::new(v.space.mesh().with_boundary(p.boundary)), v.space.degree()).unwrap(),
        coeffs: v.coeffs.clone(),
    };
    let a = stationary_indicator(&p, 0, std::slice::from_ref(&v), 0.0, &w).map_err(|e| e.to_string())?.eta;
    let b = stationary_indicator(&p, 0, &[v.scaled(s)], 0.0, &w).map_err(|e| e.to_string())?.eta;
    ensure((b - s.abs() * a).abs() <= 1e-12 * b.max(1e-300), || format!("indicator {b} vs |s| * {a}"))
}

/// The stationary indicator vanishes on the interpolant of an exactly
/// representable solution.
pub fn indicator_zero_for_exact(mesh: &Mesh, q: Quadratic, eps: f64, beta: Point) -> Check {
    let p = quadratic_problem(q, eps, beta);
    let space = DGSpace::new(Arc::new(mesh.with_boundary(p.boundary)), 2).map_err(|e| e.to_string())?;
    let u = space.project(|x| q.value(x));
    let w = Weights::new(eps, 0.0, Penalty::for_degree(2));
    let r = stationary_indicator(&p, 0, &[u], 0.0, &w).map_err(|e| e.to_string())?;
    let scale = q.0.iter().map(|c| c.abs()).sum::<f64>().max(1.0) / eps.sqrt();
    ensure(r.eta <= 1e-9 * scale, || format!("indicator {:e} for an exact solution", r.eta))
}

/// Coupled marking never coarsens a refined element and is deterministic.
pub fn marking_consistent(values: &[Vec<f64>], tol: &Tolerances) -> Check {
    let (refine, coarsen) = mark_coupled(values, tol).map_err(|e| e.to_string())?;
    let again = mark_coupled(values, tol).map_err(|e| e.to_string())?;
    ensure(again == (refine.clone(), coarsen.clone()), || "marking not deterministic".into())?;
    ensure(refine.iter().all(|i| !coarsen.contains(i)), || "refine and coarsen sets intersect".into())?;
    for i in 0..values[0].len() {
        let any_high = values.iter().any(|v| v[i] > tol.stol_plus);
        let all_low = values.iter().all(|v| v[i] < tol.stol_minus);
        ensure(refine.contains(&i) == any_high, || format!("element {i} refine flag"))?;
        ensure(coarsen.contains(&i) == (all_low && !any_high), || format!("element {i} coarsen flag"))?;
    }
    Ok(())
}

/// Random-looking but reproducible numbers in `[0, 1)`.
pub fn lcg(seed: &mut u64) -> f64 {
    *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    (*seed >> 11) as f64 / (1u64 << 53) as f64
}
