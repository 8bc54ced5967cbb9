//! Sparse direct solves with a cached symbolic factorisation per pattern.

use crate::assembly::{BlockMatrix, BlockPattern};
use crate::error::{Error, Result};
use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use std::sync::Arc;

/// Relative residual bound accepted after the solve.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Default)]
pub struct LinearSolver {
    cached: Option<(Arc<BlockPattern>, SymbolicLu<usize>)>,
}

impl LinearSolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn solve(&mut self, a: &BlockMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(rhs.len(), a.dim());
        let mat = a.to_faer();
        let symbolic = match &self.cached {
            Some((p, s)) if Arc::ptr_eq(p, a.pattern()) => s.clone(),
            _ => {
                let s = SymbolicLu::try_new(mat.symbolic())
                    .map_err(|e| Error::LinearSolver(format!("symbolic factorisation: {e:?}")))?;
                self.cached = Some((a.pattern().clone(), s.clone()));
                s
            }
        };
        let lu = Lu::try_new_with_symbolic(symbolic, mat.as_ref())
            .map_err(|e| Error::LinearSolver(format!("numeric factorisation: {e:?}")))?;
        let n = rhs.len();
        let mut x = faer::Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
        lu.solve_in_place(x.as_mut());
        let mut sol: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
        let check = |sol: &[f64]| {
            let r = residual(a, sol, rhs);
            let bound = RESIDUAL_TOL * (a.max_abs() * norm(sol) + norm(rhs));
            (r, bound)
        };
        let (mut r, bound) = check(&sol);
        if !(r <= bound) {
            // One step of iterative refinement.
            let ax = a.matvec(&sol);
            let mut d = faer::Mat::<f64>::from_fn(n, 1, |i, _| rhs[i] - ax[i]);
            lu.solve_in_place(d.as_mut());
            for (i, s) in sol.iter_mut().enumerate() {
                *s += d[(i, 0)];
            }
            r = check(&sol).0;
        }
        let bound = check(&sol).1;
        if !r.is_finite() || r > bound {
            return Err(Error::LinearSolver(format!("residual {r:e} exceeds {bound:e}; matrix may be singular")));
        }
        Ok(sol)
    }
}

/// One-shot solve without caching.
pub fn linear_solve(a: &BlockMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    LinearSolver::new().solve(a, rhs)
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn residual(a: &BlockMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.matvec(x);
    ax.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
}
