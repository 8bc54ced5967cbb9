//! Gauss rules on the unit interval and collapsed (Stroud) rules on the
//! reference triangle `(0,0), (1,0), (0,1)`.

use crate::error::{Error, Result};

pub const MAX_EXACTNESS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadratureKind {
    Triangle,
    Edge,
}

/// Quadrature points in reference coordinates with positive weights.
///
/// Triangle rules carry `(xi, eta)` pairs and weights summing to `1/2`;
/// edge rules use only the first coordinate `s in [0, 1]` and weights summing to `1`.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub kind: QuadratureKind,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Value and derivative of the Jacobi polynomial `P_n^{(a,b)}` at `x`.
fn jacobi(n: usize, a: f64, b: f64, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p0 = 1.0;
    let mut d0 = 0.0;
    let mut p1 = 0.5 * ((a - b) + (a + b + 2.0) * x);
    let mut d1 = 0.5 * (a + b + 2.0);
    for m in 2..=n {
        let m = m as f64;
        let c = 2.0 * m + a + b;
        let a1 = 2.0 * m * (m + a + b) * (c - 2.0);
        let a2 = (c - 1.0) * (a * a - b * b);
        let a3 = (c - 1.0) * c * (c - 2.0);
        let a4 = 2.0 * (m + a - 1.0) * (m + b - 1.0) * c;
        let p2 = ((a2 + a3 * x) * p1 - a4 * p0) / a1;
        let d2 = ((a2 + a3 * x) * d1 + a3 * p1 - a4 * d0) / a1;
        p0 = p1;
        p1 = p2;
        d0 = d1;
        d1 = d2;
    }
    (p1, d1)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Gauss-Jacobi nodes and weights on `[-1, 1]` for the weight `(1-x)^a (1+x)^b`
/// with small non-negative integer exponents.
fn gauss_jacobi(n: usize, a: usize, b: usize) -> (Vec<f64>, Vec<f64>) {
    let (af, bf) = (a as f64, b as f64);
    // Roots are bracketed on a fine grid, then polished by bisection and Newton.
    let samples = 400 * n + 1;
    let mut nodes = Vec::with_capacity(n);
    let mut prev_x = -1.0;
    let mut prev_p = jacobi(n, af, bf, prev_x).0;
    for s in 1..samples {
        let x = -1.0 + 2.0 * s as f64 / (samples - 1) as f64;
        let p = jacobi(n, af, bf, x).0;
        if prev_p == 0.0 {
            nodes.push(prev_x);
        } else if prev_p * p < 0.0 {
            let (mut lo, mut hi) = (prev_x, x);
            let mut plo = prev_p;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let pm = jacobi(n, af, bf, mid).0;
                if pm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if plo * pm < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    plo = pm;
                }
            }
            let mut r = 0.5 * (lo + hi);
            for _ in 0..3 {
                let (p, d) = jacobi(n, af, bf, r);
                if d != 0.0 {
                    r -= p / d;
                }
            }
            nodes.push(r);
        }
        prev_x = x;
        prev_p = p;
    }
    assert_eq!(nodes.len(), n, "Gauss-Jacobi root search failed");
    let c = 2f64.powi((a + b + 1) as i32) * factorial(n + a) * factorial(n + b) / (factorial(n + a + b) * factorial(n));
    let weights = nodes
        .iter()
        .map(|&x| {
            let d = jacobi(n, af, bf, x).1;
            c / ((1.0 - x * x) * d * d)
        })
        .collect();
    (nodes, weights)
}

/// Returns a rule exact for polynomials of total degree `<= exactness`.
pub fn quadrature(kind: QuadratureKind, exactness: usize) -> Result<QuadratureRule> {
    if exactness == 0 || exactness > MAX_EXACTNESS {
        return Err(Error::UnsupportedExactness(exactness));
    }
    // n Gauss points integrate degree 2n-1 exactly.
    let n = (exactness + 2) / 2;
    match kind {
        QuadratureKind::Edge => {
            let (x, w) = gauss_jacobi(n, 0, 0);
            Ok(QuadratureRule {
                kind,
                points: x.iter().map(|&x| [0.5 * (x + 1.0), 0.0]).collect(),
                weights: w.iter().map(|&w| 0.5 * w).collect(),
                exactness,
            })
        }
        QuadratureKind::Triangle => {
            // x = u, y = (1-u) v with the (1-u) Jacobian absorbed by the Jacobi weight.
            let (su, wu) = gauss_jacobi(n, 1, 0);
            let (sv, wv) = gauss_jacobi(n, 0, 0);
            let mut points = Vec::with_capacity(n * n);
            let mut weights = Vec::with_capacity(n * n);
            for (i, &s) in su.iter().enumerate() {
                let u = 0.5 * (s + 1.0);
                for (j, &t) in sv.iter().enumerate() {
                    let v = 0.5 * (t + 1.0);
                    points.push([u, (1.0 - u) * v]);
                    weights.push(0.25 * wu[i] * 0.5 * wv[j]);
                }
            }
            Ok(QuadratureRule { kind, points, weights, exactness })
        }
    }
}

/// Two-point Gauss rule on `[t0, t1]` used for all time integrals.
pub fn time_gauss2(t0: f64, t1: f64) -> [(f64, f64); 2] {
    let h = t1 - t0;
    let c = 0.5 * (t0 + t1);
    let d = 0.5 * h / 3f64.sqrt();
    [(c - d, 0.5 * h), (c + d, 0.5 * h)]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn monomial_integral(p: usize, q: usize) -> f64 {
        factorial(p) * factorial(q) / factorial(p + q + 2)
    }

    #[test]
    fn midpoint_rule_for_exactness_one() {
        let r = quadrature(QuadratureKind::Triangle, 1).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r.weights[0] - 0.5).abs() < 1e-15);
        assert!((r.points[0][0] - 1.0 / 3.0).abs() < 1e-14);
        assert!((r.points[0][1] - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn two_point_gauss_on_edge() {
        let r = quadrature(QuadratureKind::Edge, 3).unwrap();
        assert_eq!(r.len(), 2);
        let v: f64 = r.points.iter().zip(&r.weights).map(|(p, w)| w * p[0].powi(3)).sum();
        assert!((v - 0.25).abs() < 1e-14);
    }

    #[test]
    fn triangle_rules_integrate_monomials() {
        for d in 1..=MAX_EXACTNESS {
            let r = quadrature(QuadratureKind::Triangle, d).unwrap();
            let wsum: f64 = r.weights.iter().sum();
            assert!((wsum - 0.5).abs() < 1e-14);
            assert!(r.weights.iter().all(|&w| w > 0.0));
            for p in 0..=d {
                for q in 0..=(d - p) {
                    let v: f64 = r
                        .points
                        .iter()
                        .zip(&r.weights)
                        .map(|(x, w)| w * x[0].powi(p as i32) * x[1].powi(q as i32))
                        .sum();
                    let exact = monomial_integral(p, q);
                    assert!((v - exact).abs() <= 1e-13 * exact.max(1e-3), "d={d} p={p} q={q}");
                }
            }
        }
    }

    #[test]
    fn x2y2_with_exactness_four() {
        let r = quadrature(QuadratureKind::Triangle, 4).unwrap();
        let v: f64 = r.points.iter().zip(&r.weights).map(|(x, w)| w * x[0] * x[0] * x[1] * x[1]).sum();
        // 2! 2! / 6! = 4 / 720
        assert!((v - 1.0 / 180.0).abs() < 1e-15);
    }

    #[test]
    fn edge_rules_integrate_monomials() {
        for d in 1..=MAX_EXACTNESS {
            let r = quadrature(QuadratureKind::Edge, d).unwrap();
            for p in 0..=d {
                let v: f64 = r.points.iter().zip(&r.weights).map(|(x, w)| w * x[0].powi(p as i32)).sum();
                assert!((v - 1.0 / (p as f64 + 1.0)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rejects_unsupported_exactness() {
        assert!(quadrature(QuadratureKind::Triangle, 0).is_err());
        assert!(quadrature(QuadratureKind::Edge, 21).is_err());
    }
}
