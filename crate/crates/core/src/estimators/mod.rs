//! Error norms, residual indicators, step estimators and their accumulation.

pub mod accumulate;
pub mod indicators;
pub mod norms;

pub use accumulate::{effectivity, RunAccumulator, RunEstimate, StepTerms};
pub use indicators::{
    elliptic_source, initial_elliptic_source, initial_spatial_estimate, jump_estimate_sq, spatial_step_estimate,
    stationary_indicator, temporal_step_indicator, ComponentStep, ElementIndicators, StationaryReport, StepEstimate,
    StepInput, TemporalIndicator,
};
pub use norms::{energy_norm, jump_seminorm_part, l2_error, l2_norm, ErrorAccumulator};

use crate::assembly::Penalty;
use crate::dg::basis::BasisTable;
use crate::dg::space::{hessian_weights, DGFunction, Tables};
use crate::geometry::Tensor2;

/// Scalar weights of the residual estimators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Weights {
    /// Smallest diffusion eigenvalue.
    pub eps: f64,
    pub kappa: f64,
    pub penalty: Penalty,
}

impl Weights {
    pub fn new(eps: f64, kappa: f64, penalty: Penalty) -> Self {
        Weights { eps, kappa, penalty }
    }

    fn rho(&self, h: f64) -> f64 {
        let r = h / self.eps.sqrt();
        if self.kappa > 0.0 {
            r.min(1.0 / self.kappa.sqrt())
        } else {
            r
        }
    }

    pub fn rho_k(&self, h: f64) -> f64 {
        self.rho(h)
    }

    pub fn rho_e(&self, h: f64) -> f64 {
        self.rho(h)
    }

    pub fn rho_t(&self) -> f64 {
        let r = 1.0 / self.eps.sqrt();
        if self.kappa > 0.0 {
            r.min(1.0 / self.kappa.sqrt())
        } else {
            r
        }
    }

    /// Weight of `||[u]||^2` on an edge: `eps sigma / h + kappa h + h / eps`,
    /// with `eps_pen` the diffusion used by the penalty term.
    pub fn jump_weight(&self, eps_pen: f64, sigma: f64, h: f64) -> f64 {
        eps_pen * sigma / h + self.kappa * h + h / self.eps
    }
}

/// Values and gradients of a DG function at the points of a table on one
/// element.
pub(crate) fn sample(u: &DGFunction, element: usize, table: &BasisTable, val: &mut Vec<f64>, grad: &mut Vec<[f64; 2]>) {
    let cell = u.space.mesh().cell(element);
    let s = 1.0 / (2.0 * cell.area).sqrt();
    let ji = &cell.jinv;
    let c = u.block(element);
    let n = table.nloc;
    val.clear();
    grad.clear();
    for q in 0..table.npts {
        let v = &table.val[q * n..(q + 1) * n];
        let g = &table.grad[q * n..(q + 1) * n];
        let mut a = 0.0;
        let mut b = [0.0; 2];
        for l in 0..n {
            a += c[l] * v[l];
            b[0] += c[l] * g[l][0];
            b[1] += c[l] * g[l][1];
        }
        val.push(s * a);
        grad.push([s * (ji[0][0] * b[0] + ji[1][0] * b[1]), s * (ji[0][1] * b[0] + ji[1][1] * b[1])]);
    }
}

/// `div(eps grad u)` at the points of a table, for a tensor constant on the element.
pub(crate) fn sample_div_flux(u: &DGFunction, element: usize, table: &BasisTable, eps: &Tensor2, out: &mut Vec<f64>) {
    let cell = u.space.mesh().cell(element);
    let s = 1.0 / (2.0 * cell.area).sqrt();
    let w = hessian_weights(cell, eps);
    let c = u.block(element);
    let n = table.nloc;
    out.clear();
    for q in 0..table.npts {
        let h = &table.hess[q * n..(q + 1) * n];
        out.push(s * (0..n).map(|l| c[l] * (w[0] * h[l][0] + w[1] * h[l][1] + w[2] * h[l][2])).sum::<f64>());
    }
}

/// Exactness used for estimator quadrature on a degree-`k` space.
pub(crate) fn estimator_tables(u: &DGFunction) -> crate::error::Result<Tables> {
    let k = u.space.degree();
    u.space.tables((2 * k + 4).min(crate::dg::quadrature::MAX_EXACTNESS))
}
