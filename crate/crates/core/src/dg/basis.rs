//! L2-orthonormal polynomial basis on the reference triangle.
//!
//! The basis is obtained by Cholesky-orthonormalising the graded monomials
//! `x^a y^b, a + b <= k` against the exact reference Gram matrix, so the first
//! function is the constant and each degree block spans exactly `P_d`.

use super::quadrature::QuadratureRule;

pub const MAX_DEGREE: usize = 6;

/// Number of local basis functions for polynomial degree `k`.
pub fn nloc(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

#[derive(Clone, Debug)]
pub struct ReferenceBasis {
    pub degree: usize,
    exponents: Vec<(usize, usize)>,
    /// Row `l` holds the monomial coefficients of basis function `l`.
    coeffs: Vec<f64>,
}

/// Values, reference gradients and reference Hessians `(xx, xy, yy)` of
/// all basis functions at one point.
#[derive(Clone, Debug, Default)]
pub struct BasisEval {
    pub val: Vec<f64>,
    pub grad: Vec<[f64; 2]>,
    pub hess: Vec<[f64; 3]>,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

impl ReferenceBasis {
    pub fn new(degree: usize) -> Self {
        assert!(degree <= MAX_DEGREE, "degree {degree} exceeds {MAX_DEGREE}");
        let mut exponents = Vec::new();
        for d in 0..=degree {
            for b in 0..=d {
                exponents.push((d - b, b));
            }
        }
        let n = exponents.len();
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let p = exponents[i].0 + exponents[j].0;
                let q = exponents[i].1 + exponents[j].1;
                gram[i * n + j] = factorial(p) * factorial(q) / factorial(p + q + 2);
            }
        }
        // G = L L^T; basis = L^{-1} m.
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = gram[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        let mut inv = vec![0.0; n * n];
        for c in 0..n {
            for i in 0..n {
                let mut s = if i == c { 1.0 } else { 0.0 };
                for k in 0..i {
                    s -= l[i * n + k] * inv[k * n + c];
                }
                inv[i * n + c] = s / l[i * n + i];
            }
        }
        ReferenceBasis { degree, exponents, coeffs: inv }
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    fn monomials(&self, p: [f64; 2], out_v: &mut [f64], out_g: &mut [[f64; 2]], out_h: &mut [[f64; 3]]) {
        let k = self.degree;
        let mut px = [0.0; MAX_DEGREE + 1];
        let mut py = [0.0; MAX_DEGREE + 1];
        px[0] = 1.0;
        py[0] = 1.0;
        for i in 1..=k {
            px[i] = px[i - 1] * p[0];
            py[i] = py[i - 1] * p[1];
        }
        let pw = |arr: &[f64; MAX_DEGREE + 1], e: isize| if e < 0 { 0.0 } else { arr[e as usize] };
        for (m, &(a, b)) in self.exponents.iter().enumerate() {
            let (ai, bi) = (a as isize, b as isize);
            let (af, bf) = (a as f64, b as f64);
            out_v[m] = px[a] * py[b];
            out_g[m] = [af * pw(&px, ai - 1) * py[b], bf * px[a] * pw(&py, bi - 1)];
            out_h[m] = [
                af * (af - 1.0) * pw(&px, ai - 2) * py[b],
                af * bf * pw(&px, ai - 1) * pw(&py, bi - 1),
                bf * (bf - 1.0) * px[a] * pw(&py, bi - 2),
            ];
        }
    }

    /// Evaluates all basis functions (with derivatives) at a reference point.
    pub fn eval_into(&self, p: [f64; 2], out: &mut BasisEval) {
        let n = self.len();
        let mut mv = [0.0; 28];
        let mut mg = [[0.0; 2]; 28];
        let mut mh = [[0.0; 3]; 28];
        self.monomials(p, &mut mv[..n], &mut mg[..n], &mut mh[..n]);
        out.val.resize(n, 0.0);
        out.grad.resize(n, [0.0; 2]);
        out.hess.resize(n, [0.0; 3]);
        for l in 0..n {
            let row = &self.coeffs[l * n..(l + 1) * n];
            let (mut v, mut g, mut h) = (0.0, [0.0; 2], [0.0; 3]);
            for j in 0..=l {
                let c = row[j];
                v += c * mv[j];
                g[0] += c * mg[j][0];
                g[1] += c * mg[j][1];
                h[0] += c * mh[j][0];
                h[1] += c * mh[j][1];
                h[2] += c * mh[j][2];
            }
            out.val[l] = v;
            out.grad[l] = g;
            out.hess[l] = h;
        }
    }

    /// Values only, written into `out[..len]`.
    pub fn values_into(&self, p: [f64; 2], out: &mut [f64]) {
        let n = self.len();
        let mut mv = [0.0; 28];
        let k = self.degree;
        let mut px = [1.0; MAX_DEGREE + 1];
        let mut py = [1.0; MAX_DEGREE + 1];
        for i in 1..=k {
            px[i] = px[i - 1] * p[0];
            py[i] = py[i - 1] * p[1];
        }
        for (m, &(a, b)) in self.exponents.iter().enumerate() {
            mv[m] = px[a] * py[b];
        }
        for l in 0..n {
            let row = &self.coeffs[l * n..(l + 1) * n];
            out[l] = row[..=l].iter().zip(&mv[..=l]).map(|(c, m)| c * m).sum();
        }
    }

    pub fn tabulate(&self, points: &[[f64; 2]]) -> BasisTable {
        let n = self.len();
        let mut table = BasisTable {
            nloc: n,
            npts: points.len(),
            val: Vec::with_capacity(n * points.len()),
            grad: Vec::with_capacity(n * points.len()),
            hess: Vec::with_capacity(n * points.len()),
        };
        let mut e = BasisEval::default();
        for &p in points {
            self.eval_into(p, &mut e);
            table.val.extend_from_slice(&e.val);
            table.grad.extend_from_slice(&e.grad);
            table.hess.extend_from_slice(&e.hess);
        }
        table
    }
}

/// Basis data tabulated at a fixed set of reference points, point-major.
#[derive(Clone, Debug)]
pub struct BasisTable {
    pub nloc: usize,
    pub npts: usize,
    pub val: Vec<f64>,
    pub grad: Vec<[f64; 2]>,
    pub hess: Vec<[f64; 3]>,
}

impl BasisTable {
    pub fn val_at(&self, q: usize) -> &[f64] {
        &self.val[q * self.nloc..(q + 1) * self.nloc]
    }

    pub fn grad_at(&self, q: usize) -> &[[f64; 2]] {
        &self.grad[q * self.nloc..(q + 1) * self.nloc]
    }

    pub fn hess_at(&self, q: usize) -> &[[f64; 3]] {
        &self.hess[q * self.nloc..(q + 1) * self.nloc]
    }
}

/// Tabulates a triangle rule.
pub fn tabulate_rule(basis: &ReferenceBasis, rule: &QuadratureRule) -> BasisTable {
    basis.tabulate(&rule.points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dg::quadrature::{quadrature, QuadratureKind};

    #[test]
    fn local_dimension() {
        assert_eq!(nloc(0), 1);
        assert_eq!(nloc(1), 3);
        assert_eq!(nloc(2), 6);
    }

    #[test]
    fn reference_basis_is_orthonormal() {
        for k in 0..=4 {
            let b = ReferenceBasis::new(k);
            let rule = quadrature(QuadratureKind::Triangle, 2 * k + 2).unwrap();
            let t = b.tabulate(&rule.points);
            let n = b.len();
            for i in 0..n {
                for j in 0..n {
                    let v: f64 = (0..rule.len()).map(|q| rule.weights[q] * t.val_at(q)[i] * t.val_at(q)[j]).sum();
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((v - expected).abs() < 1e-10, "k={k} ({i},{j}) = {v}");
                }
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let b = ReferenceBasis::new(3);
        let p = [0.21, 0.33];
        let h = 1e-6;
        let mut e = BasisEval::default();
        let mut ep = BasisEval::default();
        let mut em = BasisEval::default();
        b.eval_into(p, &mut e);
        for dir in 0..2 {
            let mut pp = p;
            let mut pm = p;
            pp[dir] += h;
            pm[dir] -= h;
            b.eval_into(pp, &mut ep);
            b.eval_into(pm, &mut em);
            for l in 0..b.len() {
                let fd = (ep.val[l] - em.val[l]) / (2.0 * h);
                assert!((fd - e.grad[l][dir]).abs() < 1e-6 * (1.0 + fd.abs()));
                let fdg = (ep.grad[l][dir] - em.grad[l][dir]) / (2.0 * h);
                let h_idx = if dir == 0 { 0 } else { 2 };
                assert!((fdg - e.hess[l][h_idx]).abs() < 1e-5 * (1.0 + fdg.abs()));
            }
        }
    }
}
