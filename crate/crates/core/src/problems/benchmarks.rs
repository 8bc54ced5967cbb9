//! The four benchmark problems with their exact solutions and manufactured
//! sources.

use super::{Component, ExactSolution, Problem, RunDefaults};
use crate::error::Result;
use crate::geometry::{isotropic, Point, Rect};
use crate::mesh::{BoundaryKind, BoundaryTags, Mesh};
use crate::solver::darcy::{darcy_solve, DarcySolution};
use std::f64::consts::PI;
use std::sync::Arc;

/// Constant-coefficient transport data shared by the manufactured benchmarks.
fn component(
    eps: f64,
    beta: Point,
    value: Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>,
    grad: Arc<dyn Fn(Point, f64) -> Point + Send + Sync>,
    source: Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>,
) -> Component {
    let init = value.clone();
    Component {
        diffusion: Arc::new(move |_| isotropic(eps)),
        diffusion_min: eps,
        velocity: Arc::new(move |_, _| beta),
        velocity_div: Arc::new(|_, _| 0.0),
        source,
        dirichlet: value.clone(),
        initial: Arc::new(move |x| init(x, 0.0)),
        exact: Some(ExactSolution { value, grad }),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Example1Params {
    pub eps: f64,
    pub beta: Point,
    pub final_time: f64,
}

impl Default for Example1Params {
    fn default() -> Self {
        Example1Params { eps: 1e-6, beta: [2.0, 3.0], final_time: 0.5 }
    }
}

/// Value, gradient and Laplacian of the spatial profile
/// `16 x(1-x) y(1-y) (1/2 + atan(2 (r0^2 - |x - c|^2) / sqrt(eps)) / pi)`.
fn ex1_profile(x: Point, eps: f64) -> (f64, Point, f64) {
    let s = 2.0 / eps.sqrt();
    let (px, py) = (x[0] - 0.5, x[1] - 0.5);
    let z = s * (0.0625 - px * px - py * py);
    let zx = -2.0 * s * px;
    let zy = -2.0 * s * py;
    let zz = -2.0 * s;
    let d = 1.0 / (1.0 + z * z);
    let w = 0.5 + z.atan() / PI;
    let wx = zx * d / PI;
    let wy = zy * d / PI;
    let lap_w = ((zz - 2.0 * z * zx * zx * d) * d + (zz - 2.0 * z * zy * zy * d) * d) / PI;
    let (gx, gy) = (x[0] * (1.0 - x[0]), x[1] * (1.0 - x[1]));
    let q = 16.0 * gx * gy;
    let qx = 16.0 * (1.0 - 2.0 * x[0]) * gy;
    let qy = 16.0 * gx * (1.0 - 2.0 * x[1]);
    let lap_q = -32.0 * (gy + gx);
    let v = q * w;
    let g = [qx * w + q * wx, qy * w + q * wy];
    let lap = lap_q * w + 2.0 * (qx * wx + qy * wy) + q * lap_w;
    (v, g, lap)
}

/// Polynomial reaction with a stationary internal circular layer.
pub fn example1(p: &Example1Params) -> Problem {
    let Example1Params { eps, beta, final_time } = *p;
    let value = Arc::new(move |x: Point, t: f64| (PI * t).sin() * ex1_profile(x, eps).0);
    let grad = Arc::new(move |x: Point, t: f64| {
        let g = ex1_profile(x, eps).1;
        let st = (PI * t).sin();
        [st * g[0], st * g[1]]
    });
    let source = Arc::new(move |x: Point, t: f64| {
        let (v, g, lap) = ex1_profile(x, eps);
        let st = (PI * t).sin();
        let u = st * v;
        PI * (PI * t).cos() * v - eps * st * lap + st * (beta[0] * g[0] + beta[1] * g[1]) + u.powi(4)
    });
    Problem {
        name: "ex1".into(),
        domain: Rect::unit(),
        boundary: BoundaryTags::default(),
        components: vec![component(eps, beta, value, grad, source)],
        reaction: Arc::new(|u, r, d| {
            r[0] = u[0].powi(4);
            d[0] = 4.0 * u[0].powi(3);
            Ok(())
        }),
        kappa: 0.0,
        final_time,
        static_velocity: true,
        defaults: RunDefaults {
            degree: 2,
            nx: 2,
            ny: 2,
            tau0: 0.25,
            ttol: 1e-3,
            stol_plus: 3e-4,
            stol_minus: 3e-7,
            max_level: 24,
        },
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Example2Params {
    pub eps: f64,
    pub final_time: f64,
}

impl Default for Example2Params {
    fn default() -> Self {
        Example2Params { eps: 1e-5, final_time: 1.0 }
    }
}

/// Two fronts `1/2 (1 + sign * tanh(z))` with `z = (2x + speed t + shift) / width`.
/// Returns value, x-derivative, second x-derivative and time derivative.
fn tanh_front(x: f64, t: f64, sign: f64, speed: f64, shift: f64, width: f64) -> (f64, f64, f64, f64) {
    let z = (2.0 * x + speed * t + shift) / width;
    let th = z.tanh();
    let sech2 = 1.0 - th * th;
    let v = 0.5 * (1.0 + sign * th);
    let vx = sign * sech2 / width;
    let vxx = -sign * 4.0 * th * sech2 / (width * width);
    let vt = sign * 0.5 * speed * sech2 / width;
    (v, vx, vxx, vt)
}

/// Coupled system of two fronts moving towards each other.
pub fn example2(p: &Example2Params) -> Problem {
    let Example2Params { eps, final_time } = *p;
    let width = (5.0 * eps).sqrt();
    let f1 = move |x: Point, t: f64| tanh_front(x[0], t, -1.0, -0.2, -0.8, width);
    let f2 = move |x: Point, t: f64| tanh_front(x[0], t, 1.0, 0.2, -0.9, width);
    let beta1 = [1.0, 0.0];
    let beta2 = [-1.0, 0.0];
    let c1 = component(
        eps,
        beta1,
        Arc::new(move |x, t| f1(x, t).0),
        Arc::new(move |x, t| [f1(x, t).1, 0.0]),
        Arc::new(move |x, t| {
            let (u1, u1x, u1xx, u1t) = f1(x, t);
            let u2 = f2(x, t).0;
            u1t - eps * u1xx + beta1[0] * u1x + u1 * u2
        }),
    );
    let c2 = component(
        eps,
        beta2,
        Arc::new(move |x, t| f2(x, t).0),
        Arc::new(move |x, t| [f2(x, t).1, 0.0]),
        Arc::new(move |x, t| {
            let (u2, u2x, u2xx, u2t) = f2(x, t);
            let u1 = f1(x, t).0;
            u2t - eps * u2xx + beta2[0] * u2x + u1 * u2
        }),
    );
    Problem {
        name: "ex2".into(),
        domain: Rect::unit(),
        boundary: BoundaryTags::default(),
        components: vec![c1, c2],
        reaction: Arc::new(|u, r, d| {
            let uv = u[0] * u[1];
            r[0] = uv;
            r[1] = uv;
            d[0] = u[1];
            d[1] = u[0];
            d[2] = u[1];
            d[3] = u[0];
            Ok(())
        }),
        kappa: 0.0,
        final_time,
        static_velocity: true,
        defaults: RunDefaults {
            degree: 2,
            nx: 2,
            ny: 2,
            tau0: 0.1,
            ttol: 1e-3,
            stol_plus: 1e-1,
            stol_minus: 1e-4,
            max_level: 24,
        },
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Example3Params {
    pub eps: f64,
    pub gamma: f64,
    pub beta: Point,
    pub final_time: f64,
}

impl Default for Example3Params {
    fn default() -> Self {
        Example3Params { eps: 1e-4, gamma: 100.0, beta: [-0.01, -0.01], final_time: 1.0 }
    }
}

impl Example3Params {
    /// Front steepness `sqrt(gamma / (4 eps))`.
    pub fn steepness(&self) -> f64 {
        (self.gamma / (4.0 * self.eps)).sqrt()
    }

    /// Front speed along `x1 + x2`, `sqrt(gamma eps) - 0.02`.
    pub fn speed(&self) -> f64 {
        -0.02 + (self.gamma * self.eps).sqrt()
    }
}

/// Travelling front with a bistable cubic reaction and no source.
pub fn example3(p: &Example3Params) -> Problem {
    let params = *p;
    let (a, b) = (params.steepness(), params.speed());
    // 1 / (1 + e^z) written through tanh to stay finite for large |z|.
    let profile = move |x: Point, t: f64| {
        let z = a * (x[0] + x[1] - b * t) + a * (b - 1.0);
        0.5 * (1.0 - (0.5 * z).tanh())
    };
    let grad = move |x: Point, t: f64| {
        let u = profile(x, t);
        let d = -a * u * (1.0 - u);
        [d, d]
    };
    let gamma = params.gamma;
    Problem {
        name: "ex3".into(),
        domain: Rect::unit(),
        boundary: BoundaryTags::default(),
        components: vec![component(params.eps, params.beta, Arc::new(profile), Arc::new(grad), Arc::new(|_, _| 0.0))],
        reaction: Arc::new(move |u, r, d| {
            r[0] = gamma * u[0] * u[0] * (u[0] - 1.0);
            d[0] = gamma * (3.0 * u[0] * u[0] - 2.0 * u[0]);
            Ok(())
        }),
        kappa: 0.0,
        final_time: params.final_time,
        static_velocity: true,
        defaults: RunDefaults {
            degree: 2,
            nx: 2,
            ny: 2,
            tau0: 0.25,
            ttol: 3e-3,
            stol_plus: 1e-3,
            stol_minus: 1e-6,
            max_level: 24,
        },
    }
}

/// A high-permeability rectangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Streak {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PermeabilityField {
    pub background: f64,
    pub multiplier: f64,
    pub streaks: Vec<Streak>,
}

impl PermeabilityField {
    /// Three horizontal streaks of height `height` centred at `x2 = 0.5, 1, 1.5`.
    pub fn three_streaks(background: f64, multiplier: f64, x0: f64, x1: f64, height: f64) -> Self {
        let streaks =
            [0.5, 1.0, 1.5].iter().map(|&c| Streak { x0, x1, y0: c - 0.5 * height, y1: c + 0.5 * height }).collect();
        PermeabilityField { background, multiplier, streaks }
    }

    pub fn uniform(value: f64) -> Self {
        PermeabilityField { background: value, multiplier: 1.0, streaks: Vec::new() }
    }

    pub fn at(&self, x: Point) -> f64 {
        let inside = self.streaks.iter().any(|s| x[0] >= s.x0 && x[0] <= s.x1 && x[1] >= s.y0 && x[1] <= s.y1);
        if inside {
            self.background * self.multiplier
        } else {
            self.background
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Example4Params {
    pub permeability: PermeabilityField,
    pub viscosity: f64,
    pub diffusion: [f64; 2],
    pub final_time: f64,
    /// Structured grid of the pressure solve.
    pub darcy_nx: usize,
    pub darcy_ny: usize,
}

impl Default for Example4Params {
    fn default() -> Self {
        Example4Params {
            permeability: PermeabilityField::three_streaks(0.06, 100.0, 0.4, 2.6, 0.2),
            viscosity: 0.1,
            diffusion: [1e-3, 1e-4],
            final_time: 1.0,
            darcy_nx: 30,
            darcy_ny: 20,
        }
    }
}

/// Monod-type reaction in a heterogeneous medium, with velocity from a
/// Darcy pressure solve. Inflow `u = 1` on the left side, no diffusive flux
/// elsewhere.
pub fn example4(p: &Example4Params) -> Result<(Problem, Arc<DarcySolution>)> {
    let domain = Rect::new(0.0, 3.0, 0.0, 2.0);
    let side_tags = BoundaryTags {
        left: BoundaryKind::Dirichlet,
        right: BoundaryKind::Dirichlet,
        bottom: BoundaryKind::Neumann,
        top: BoundaryKind::Neumann,
    };
    let darcy_mesh = Mesh::build_structured(domain, p.darcy_nx, p.darcy_ny)?.with_boundary(side_tags);
    let perm = p.permeability.clone();
    let darcy = Arc::new(darcy_solve(darcy_mesh, &|x| perm.at(x), p.viscosity, 1.0, 0.0)?);
    let dv = darcy.clone();
    let [d1, d2] = p.diffusion;
    let comp = Component {
        diffusion: Arc::new(move |_| [[d1, 0.0], [0.0, d2]]),
        diffusion_min: d1.min(d2),
        velocity: Arc::new(move |x, _| dv.velocity_at(x)),
        velocity_div: Arc::new(|_, _| 0.0),
        source: Arc::new(|_, _| 0.0),
        dirichlet: Arc::new(|_, _| 1.0),
        initial: Arc::new(|_| 0.0),
        exact: None,
    };
    let problem = Problem {
        name: "ex4".into(),
        domain,
        boundary: BoundaryTags {
            left: BoundaryKind::Dirichlet,
            right: BoundaryKind::Neumann,
            bottom: BoundaryKind::Neumann,
            top: BoundaryKind::Neumann,
        },
        components: vec![comp],
        reaction: Arc::new(|u, r, d| {
            let s = 1.0 + u[0];
            if s <= 0.0 {
                return Err(format!("u/(1+u) undefined at u = {}", u[0]));
            }
            r[0] = u[0] / s;
            d[0] = 1.0 / (s * s);
            Ok(())
        }),
        kappa: 0.0,
        final_time: p.final_time,
        static_velocity: true,
        defaults: RunDefaults {
            degree: 1,
            nx: 6,
            ny: 4,
            tau0: 0.05,
            ttol: 1e-3,
            stol_plus: 3e-4,
            stol_minus: 3e-7,
            max_level: 10,
        },
    };
    Ok((problem, darcy))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (*seed >> 11) as f64 / (1u64 << 53) as f64
    }

    #[test]
    fn example1_vanishes_initially_and_on_boundary() {
        let p = example1(&Example1Params { eps: 1e-2, ..Default::default() });
        let u = &p.components[0].exact.as_ref().unwrap().value;
        for &x in &[[0.3, 0.7], [0.5, 0.5], [0.9, 0.1]] {
            assert_eq!(u(x, 0.0), 0.0);
        }
        for s in [0.0, 0.25, 0.6, 1.0] {
            for t in [0.1, 0.3] {
                assert!(u([s, 0.0], t).abs() < 1e-15 && u([0.0, s], t).abs() < 1e-15);
                assert!(u([s, 1.0], t).abs() < 1e-15 && u([1.0, s], t).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn example1_source_at_centre_matches_finite_differences() {
        let p = example1(&Example1Params { eps: 1e-2, ..Default::default() });
        let r = p.exact_residual(0, [0.5, 0.5], 0.25, 1e-4).unwrap();
        assert!(r <= 1e-4, "{r}");
    }

    #[test]
    fn manufactured_sources_pass_residual_oracle() {
        let problems = [
            example1(&Example1Params { eps: 1e-2, ..Default::default() }),
            example1(&Example1Params { eps: 1e-4, ..Default::default() }),
            example2(&Default::default()),
            example3(&Default::default()),
        ];
        let mut seed = 7u64;
        for p in &problems {
            for i in 0..p.num_components() {
                for _ in 0..20 {
                    let x = [0.05 + 0.9 * lcg(&mut seed), 0.05 + 0.9 * lcg(&mut seed)];
                    let t = 0.05 + 0.4 * lcg(&mut seed);
                    let g = (p.components[i].exact.as_ref().unwrap().grad)(x, t);
                    let gn = g[0].hypot(g[1]);
                    // Step scaled to the local gradient so layers are resolved.
                    let h = (1e-4 / (1.0 + gn)).max(1e-7);
                    let r = p.exact_residual(i, x, t, h).unwrap();
                    assert!(r <= 1e-3, "{} comp {i} at {x:?}, t={t}: {r}", p.name);
                }
            }
        }
    }

    #[test]
    fn example2_profiles_and_exact_range() {
        let p = example2(&Default::default());
        let u1 = &p.components[0].exact.as_ref().unwrap().value;
        for x in [0.0, 0.3, 0.4, 0.41, 0.9] {
            let v = u1([x, 0.5], 0.3);
            assert!(v > 0.0 && v < 1.0 || (v - 1.0).abs() < 1e-12 || v.abs() < 1e-12);
        }
        assert!((u1([0.4, 0.2], 0.0) - 0.5).abs() < 1e-12);
        let u2 = &p.components[1].exact.as_ref().unwrap().value;
        assert!((u2([0.45, 0.2], 0.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn example3_constants_and_front() {
        let q = Example3Params::default();
        assert!((q.steepness() - 500.0).abs() < 1e-12);
        assert!((q.speed() - 0.08).abs() < 1e-15);
        let p = example3(&q);
        let u = &p.components[0].exact.as_ref().unwrap().value;
        // Level set 1/2 sits on x1 + x2 = b t + 1 - b.
        let t = 0.5;
        let s = 0.5 * (q.speed() * t + 1.0 - q.speed());
        assert!((u([s, s], t) - 0.5).abs() < 1e-12);
        assert!(u([0.0, 0.0], t) > 0.0 && u([1.0, 1.0], t) < 1.0);
        assert_eq!(p.components[0].source.as_ref()([0.3, 0.3], 0.2), 0.0);
    }

    #[test]
    fn boundary_data_matches_initial_data() {
        for p in [example1(&Default::default()), example2(&Default::default()), example3(&Default::default())] {
            for c in &p.components {
                for s in [0.0, 0.3, 0.77, 1.0] {
                    for x in [[s, 0.0], [s, 1.0], [0.0, s], [1.0, s]] {
                        assert!(((c.dirichlet)(x, 0.0) - (c.initial)(x)).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn reactions_are_monotone_where_claimed() {
        let p1 = example1(&Default::default());
        let p4 = example4(&Example4Params { darcy_nx: 3, darcy_ny: 2, ..Default::default() }).unwrap().0;
        for p in [&p1, &p4] {
            let (r0, _) = p.reaction_at(&[0.0]).unwrap();
            assert_eq!(r0[0], 0.0);
            for i in 0..=40 {
                let s = 2.0 * i as f64 / 40.0;
                let (r, d) = p.reaction_at(&[s]).unwrap();
                assert!(d[0] >= 0.0);
                if p.name == "ex4" {
                    assert!(r[0] < 1.0 && d[0] > 0.0);
                }
            }
        }
        assert!(p4.reaction_at(&[-1.0]).is_err());
    }

    #[test]
    fn reaction_jacobian_matches_finite_differences() {
        for p in [example1(&Default::default()), example2(&Default::default()), example3(&Default::default())] {
            let j = p.num_components();
            let u: Vec<f64> = (0..j).map(|i| 0.3 + 0.2 * i as f64).collect();
            let (_, d) = p.reaction_at(&u).unwrap();
            for col in 0..j {
                let h = 1e-6;
                let mut up = u.clone();
                let mut um = u.clone();
                up[col] += h;
                um[col] -= h;
                let (rp, _) = p.reaction_at(&up).unwrap();
                let (rm, _) = p.reaction_at(&um).unwrap();
                for row in 0..j {
                    let fd = (rp[row] - rm[row]) / (2.0 * h);
                    assert!((fd - d[row * j + col]).abs() <= 1e-6 * (1.0 + fd.abs()));
                }
            }
        }
    }
}
