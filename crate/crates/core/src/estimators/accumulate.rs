//! Accumulation of step estimators over a run, and effectivity indices.

use crate::error::{Error, Result};

/// Step quantities entering the global estimators, already summed over
/// components.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepTerms {
    pub tau: f64,
    pub s1_sq: f64,
    pub s2_sq: f64,
    pub s3_sq: f64,
    pub s4_sq: f64,
    pub t1_sq_int: f64,
    pub t2_int: f64,
    pub t2_sq_int: f64,
    pub tilde_t_sq: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunEstimate {
    /// `eta_S^2`.
    pub spatial_sq: f64,
    /// `eta_T^2`.
    pub temporal_sq: f64,
    /// `sum_k tilde eta_{T,k}^2`.
    pub tilde_temporal_sq: f64,
}

impl RunEstimate {
    pub fn total(&self) -> f64 {
        (self.spatial_sq + self.temporal_sq).sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct RunAccumulator {
    rho_t: f64,
    e0_sq: f64,
    last_s1_sq: f64,
    s1_trap: f64,
    s2: f64,
    s3_max: f64,
    s4_lin: f64,
    s4_sq: f64,
    t1: f64,
    t2_lin: f64,
    t2_sq: f64,
    tilde: f64,
    steps: usize,
}

impl RunAccumulator {
    /// Starts from the initial error `||e(0)||^2` and `eta_{S1,0}^2`,
    /// `eta_{S3,0}^2`.
    pub fn new(rho_t: f64, e0_sq: f64, s1_0_sq: f64, s3_0_sq: f64) -> Self {
        RunAccumulator {
            rho_t,
            e0_sq,
            last_s1_sq: s1_0_sq,
            s1_trap: 0.0,
            s2: 0.0,
            s3_max: s3_0_sq,
            s4_lin: 0.0,
            s4_sq: 0.0,
            t1: 0.0,
            t2_lin: 0.0,
            t2_sq: 0.0,
            tilde: 0.0,
            steps: 0,
        }
    }

    pub fn add(&mut self, s: &StepTerms) {
        self.s1_trap += s.tau * (self.last_s1_sq + s.s1_sq) / 3.0;
        self.last_s1_sq = s.s1_sq;
        self.s2 += s.tau * s.s2_sq;
        self.s3_max = self.s3_max.max(s.s3_sq);
        self.s4_lin += s.tau * s.s4_sq.sqrt();
        self.s4_sq += s.tau * s.s4_sq;
        self.t1 += s.t1_sq_int;
        self.t2_lin += s.t2_int;
        self.t2_sq += s.t2_sq_int;
        self.tilde += s.tilde_t_sq;
        self.steps += 1;
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn estimate(&self) -> RunEstimate {
        let r2 = self.rho_t * self.rho_t;
        RunEstimate {
            spatial_sq: self.e0_sq
                + self.s1_trap
                + self.s2
                + self.s3_max
                + (self.s4_lin * self.s4_lin).min(r2 * self.s4_sq),
            temporal_sq: self.t1 + (self.t2_lin * self.t2_lin).min(r2 * self.t2_sq),
            tilde_temporal_sq: self.tilde,
        }
    }
}

pub fn effectivity(estimate: f64, true_error: f64) -> Result<f64> {
    if true_error == 0.0 {
        return Err(Error::ZeroError);
    }
    Ok(estimate / true_error)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_run_is_zero() {
        let mut a = RunAccumulator::new(10.0, 0.0, 0.0, 0.0);
        a.add(&StepTerms { tau: 0.1, ..Default::default() });
        let e = a.estimate();
        assert_eq!((e.spatial_sq, e.temporal_sq), (0.0, 0.0));
    }

    #[test]
    fn single_step_trapezoid() {
        let mut a = RunAccumulator::new(10.0, 0.0, 4.0, 0.0);
        a.add(&StepTerms { tau: 0.3, s1_sq: 4.0, ..Default::default() });
        assert!((a.estimate().spatial_sq - 0.3 * 8.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn s4_takes_the_smaller_alternative() {
        // sum tau eta = 3 and sum tau eta^2 = 5 with rho_T = 0.1.
        let mut a = RunAccumulator::new(0.1, 0.0, 0.0, 0.0);
        a.add(&StepTerms { tau: 1.0, s4_sq: 1.0, ..Default::default() });
        a.add(&StepTerms { tau: 1.0, s4_sq: 4.0, ..Default::default() });
        assert!((a.estimate().spatial_sq - 0.05).abs() < 1e-15);
    }

    #[test]
    fn effectivity_examples() {
        assert_eq!(effectivity(7.0, 1.0).unwrap(), 7.0);
        assert!(matches!(effectivity(1.0, 0.0), Err(Error::ZeroError)));
    }

    #[test]
    fn monotone_accumulation() {
        let mut a = RunAccumulator::new(1.0, 0.1, 0.2, 0.0);
        let mut last = a.estimate();
        for k in 0..5 {
            a.add(&StepTerms {
                tau: 0.1,
                s1_sq: k as f64,
                s2_sq: 0.5,
                s3_sq: 0.1 * k as f64,
                s4_sq: 1.0,
                t1_sq_int: 0.1,
                t2_int: 0.2,
                t2_sq_int: 0.3,
                tilde_t_sq: 0.4,
            });
            let e = a.estimate();
            assert!(e.spatial_sq >= last.spatial_sq && e.temporal_sq >= last.temporal_sq);
            last = e;
        }
    }
}
