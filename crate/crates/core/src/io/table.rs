//! Convergence and sweep tables.

use super::trace::fmt_real;
use crate::error::Result;
use std::io::Write;

/// One refinement level or one sweep value.
#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    /// Refinement level, or the swept tolerance.
    pub parameter: f64,
    pub h: f64,
    pub tau: f64,
    pub steps: usize,
    pub weighted_dofs: f64,
    /// `||e||_*`.
    pub error: f64,
    pub final_l2_error: f64,
    pub eta_s: f64,
    pub eta_t: f64,
    pub runtime_s: f64,
}

impl TableRow {
    pub fn estimate(&self) -> f64 {
        self.eta_s.hypot(self.eta_t)
    }

    pub fn effectivity(&self) -> f64 {
        self.estimate() / self.error
    }

    pub fn spatial_effectivity(&self) -> f64 {
        self.eta_s / self.error
    }

    pub fn temporal_effectivity(&self) -> f64 {
        self.eta_t / self.error
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceTable {
    pub parameter_name: String,
    pub rows: Vec<TableRow>,
}

/// `log2(a_{i-1} / a_i)` for successive entries.
pub fn log2_rates(values: &[f64]) -> Vec<f64> {
    values.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

impl ConvergenceTable {
    pub fn new(parameter_name: &str) -> Self {
        ConvergenceTable { parameter_name: parameter_name.to_string(), rows: Vec::new() }
    }

    fn column(&self, f: impl Fn(&TableRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }

    pub fn error_rates(&self) -> Vec<f64> {
        log2_rates(&self.column(|r| r.error))
    }

    pub fn estimate_rates(&self) -> Vec<f64> {
        log2_rates(&self.column(|r| r.estimate()))
    }

    pub fn spatial_estimate_rates(&self) -> Vec<f64> {
        log2_rates(&self.column(|r| r.eta_s))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record([
            self.parameter_name.as_str(),
            "h",
            "tau",
            "steps",
            "weighted_dofs",
            "error_star",
            "final_l2_error",
            "eta_S",
            "eta_T",
            "effectivity",
            "effectivity_S",
            "effectivity_T",
            "error_rate",
            "estimate_rate",
            "runtime_s",
        ])?;
        let er = self.error_rates();
        let sr = self.estimate_rates();
        for (i, r) in self.rows.iter().enumerate() {
            let rate = |v: &[f64]| if i == 0 { String::new() } else { fmt_real(v[i - 1]) };
            csv.write_record([
                fmt_real(r.parameter),
                fmt_real(r.h),
                fmt_real(r.tau),
                r.steps.to_string(),
                fmt_real(r.weighted_dofs),
                fmt_real(r.error),
                fmt_real(r.final_l2_error),
                fmt_real(r.eta_s),
                fmt_real(r.eta_t),
                fmt_real(r.effectivity()),
                fmt_real(r.spatial_effectivity()),
                fmt_real(r.temporal_effectivity()),
                rate(&er),
                rate(&sr),
                format!("{:.3}", r.runtime_s),
            ])?;
        }
        csv.flush()?;
        Ok(())
    }

    /// Fixed-width text rendering for the terminal.
    pub fn render(&self) -> String {
        let mut s = format!(
            "{:>12} {:>10} {:>10} {:>12} {:>12} {:>11} {:>11} {:>8} {:>7} {:>7}\n",
            self.parameter_name, "tau", "wdofs", "error", "estimate", "eta_S", "eta_T", "eff", "rate", "est.rate"
        );
        let er = self.error_rates();
        let sr = self.estimate_rates();
        for (i, r) in self.rows.iter().enumerate() {
            let rate = |v: &[f64]| if i == 0 { "-".to_string() } else { format!("{:.3}", v[i - 1]) };
            s += &format!(
                "{:>12.4e} {:>10.3e} {:>10.1} {:>12.4e} {:>12.4e} {:>11.3e} {:>11.3e} {:>8.3} {:>7} {:>7}\n",
                r.parameter,
                r.tau,
                r.weighted_dofs,
                r.error,
                r.estimate(),
                r.eta_s,
                r.eta_t,
                r.effectivity(),
                rate(&er),
                rate(&sr)
            );
        }
        s
    }
}
