//! Run configuration: a TOML file whose values can be overridden by
//! command-line flags.

use crate::adaptivity::{AdaptiveOptions, Tolerances};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::Mesh;
use crate::problems::{
    self, Example1Params, Example2Params, Example3Params, Example4Params, PermeabilityField, Problem,
};
use crate::solver::darcy::DarcySolution;
use serde::Deserialize;
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Adaptive,
    Uniform,
    Converge,
    Estimate,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    /// Fixed step, `stol_plus` swept, adaptive in space.
    #[default]
    Spatial,
    /// Fixed uniform mesh, `ttol` swept, adaptive in time.
    Temporal,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceOverrides {
    pub ttol: Option<f64>,
    pub stol_plus: Option<f64>,
    pub stol_minus: Option<f64>,
}

/// Problem parameters; unset values keep the benchmark defaults.
#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemParams {
    pub eps: Option<f64>,
    pub beta: Option<Point>,
    pub gamma: Option<f64>,
    pub viscosity: Option<f64>,
    pub diffusion: Option<[f64; 2]>,
    pub permeability_background: Option<f64>,
    pub permeability_multiplier: Option<f64>,
    pub darcy_nx: Option<usize>,
    pub darcy_ny: Option<usize>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergeSection {
    pub levels: usize,
}

impl Default for ConvergeSection {
    fn default() -> Self {
        ConvergeSection { levels: 3 }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct EstimateSection {
    pub kind: SweepKind,
    pub values: Vec<f64>,
    /// `stol_minus = stol_ratio * stol_plus` in spatial sweeps.
    pub stol_ratio: f64,
    /// Uniform `h`-halvings of the initial mesh in temporal sweeps.
    pub refinements: usize,
}

impl Default for EstimateSection {
    fn default() -> Self {
        EstimateSection {
            kind: SweepKind::Spatial,
            values: vec![1e-1, 1e-2, 1e-3, 1e-4],
            stol_ratio: 1e-3,
            refinements: 3,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub problem: String,
    pub mode: Mode,
    pub degree: Option<usize>,
    pub tau0: Option<f64>,
    pub final_time: Option<f64>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    /// Elements at this level are not refined further.
    pub max_level: Option<u32>,
    /// Iterate on the first step to build the starting mesh.
    pub prepare_mesh: bool,
    pub output_dir: Option<PathBuf>,
    /// VTK snapshot cadence in steps; 0 writes only the final state.
    pub every: usize,
    /// Also write the initial stiffness matrix in Matrix Market format.
    pub dump_matrix: bool,
    pub tolerances: ToleranceOverrides,
    pub params: ProblemParams,
    pub converge: ConvergeSection,
    pub estimate: EstimateSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: "ex1".into(),
            mode: Mode::Adaptive,
            degree: None,
            tau0: None,
            final_time: None,
            nx: None,
            ny: None,
            max_level: None,
            prepare_mesh: true,
            output_dir: None,
            every: 0,
            dump_matrix: false,
            tolerances: ToleranceOverrides::default(),
            params: ProblemParams::default(),
            converge: ConvergeSection::default(),
            estimate: EstimateSection::default(),
        }
    }
}

/// Problem, velocity solve (for `ex4`) and resolved settings.
pub struct Setup {
    pub problem: Problem,
    pub darcy: Option<Arc<DarcySolution>>,
    pub options: AdaptiveOptions,
    pub nx: usize,
    pub ny: usize,
}

impl Setup {
    pub fn initial_mesh(&self) -> Result<Mesh> {
        Ok(Mesh::build_structured(self.problem.domain, self.nx, self.ny)?.with_boundary(self.problem.boundary))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !problems::PROBLEM_NAMES.contains(&self.problem.as_str()) {
            return Err(Error::Config(format!(
                "unknown problem '{}' (expected one of {})",
                self.problem,
                problems::PROBLEM_NAMES.join(", ")
            )));
        }
        let positive = [("tau0", self.tau0), ("final_time", self.final_time), ("eps", self.params.eps)];
        for (name, v) in positive {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(Error::Config(format!("{name} must be positive, got {v}")));
                }
            }
        }
        if let Some(k) = self.degree {
            if k > 4 {
                return Err(Error::Config(format!("degree {k} is not supported (0..=4)")));
            }
        }
        if self.nx == Some(0) || self.ny == Some(0) {
            return Err(Error::Config("nx and ny must be positive".into()));
        }
        if self.mode == Mode::Estimate && self.estimate.values.is_empty() {
            return Err(Error::Config("estimate sweep needs at least one value".into()));
        }
        Ok(())
    }

    pub fn problem(&self) -> Result<(Problem, Option<Arc<DarcySolution>>)> {
        self.validate()?;
        let p = &self.params;
        let res = match self.problem.as_str() {
            "ex1" => {
                let mut q = Example1Params::default();
                q.eps = p.eps.unwrap_or(q.eps);
                q.beta = p.beta.unwrap_or(q.beta);
                q.final_time = self.final_time.unwrap_or(q.final_time);
                (problems::example1(&q), None)
            }
            "ex2" => {
                let mut q = Example2Params::default();
                q.eps = p.eps.unwrap_or(q.eps);
                q.final_time = self.final_time.unwrap_or(q.final_time);
                (problems::example2(&q), None)
            }
            "ex3" => {
                let mut q = Example3Params::default();
                q.eps = p.eps.unwrap_or(q.eps);
                q.gamma = p.gamma.unwrap_or(q.gamma);
                q.beta = p.beta.unwrap_or(q.beta);
                q.final_time = self.final_time.unwrap_or(q.final_time);
                (problems::example3(&q), None)
            }
            _ => {
                let mut q = Example4Params::default();
                q.viscosity = p.viscosity.unwrap_or(q.viscosity);
                q.diffusion = p.diffusion.unwrap_or(q.diffusion);
                q.final_time = self.final_time.unwrap_or(q.final_time);
                q.darcy_nx = p.darcy_nx.unwrap_or(q.darcy_nx);
                q.darcy_ny = p.darcy_ny.unwrap_or(q.darcy_ny);
                if p.permeability_background.is_some() || p.permeability_multiplier.is_some() {
                    let old = &q.permeability;
                    q.permeability = PermeabilityField {
                        background: p.permeability_background.unwrap_or(old.background),
                        multiplier: p.permeability_multiplier.unwrap_or(old.multiplier),
                        streaks: old.streaks.clone(),
                    };
                }
                let (prob, darcy) = problems::example4(&q)?;
                (prob, Some(darcy))
            }
        };
        Ok(res)
    }

    pub fn setup(&self) -> Result<Setup> {
        let (problem, darcy) = self.problem()?;
        let mut o = AdaptiveOptions::from_problem(&problem);
        let t = &self.tolerances;
        o.tolerances = Tolerances {
            ttol: t.ttol.unwrap_or(o.tolerances.ttol),
            stol_plus: t.stol_plus.unwrap_or(o.tolerances.stol_plus),
            stol_minus: t.stol_minus.unwrap_or(o.tolerances.stol_minus),
        };
        o.tolerances.validate()?;
        o.degree = self.degree.unwrap_or(o.degree);
        o.tau0 = self.tau0.unwrap_or(o.tau0);
        o.max_level = self.max_level.unwrap_or(o.max_level);
        if self.mode == Mode::Uniform || self.mode == Mode::Converge {
            o = o.uniform();
        }
        let d = problem.defaults;
        Ok(Setup { nx: self.nx.unwrap_or(d.nx), ny: self.ny.unwrap_or(d.ny), problem, darcy, options: o })
    }

    /// Output directory below `root`, defaulting to `<problem>-<mode>`.
    pub fn output_path(&self, root: Option<&Path>, mode: &str) -> PathBuf {
        let dir = self.output_dir.clone().unwrap_or_else(|| PathBuf::from(format!("{}-{mode}", self.problem)));
        match root {
            Some(r) if dir.is_relative() => r.join(dir),
            _ => dir,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_defaults() {
        let c = RunConfig::from_toml(
            r#"
            problem = "ex3"
            mode = "uniform"
            degree = 1
            tau0 = 0.05
            [tolerances]
            ttol = 1e-2
            [params]
            eps = 1e-3
            beta = [0.0, -0.5]
            [estimate]
            kind = "temporal"
            values = [0.1, 0.01]
            "#,
        )
        .unwrap();
        assert_eq!(c.mode, Mode::Uniform);
        assert_eq!(c.params.beta, Some([0.0, -0.5]));
        assert_eq!(c.estimate.kind, SweepKind::Temporal);
        assert_eq!(c.converge.levels, 3);
        let s = c.setup().unwrap();
        assert_eq!(s.options.tolerances.ttol, 1e-2);
        assert_eq!(s.options.tolerances.stol_plus, 1e-3);
        assert!(!s.options.adapt_space && !s.options.adapt_time);
        assert_eq!(s.problem.components[0].diffusion_min, 1e-3);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(RunConfig::from_toml("problem = 3").is_err());
        assert!(RunConfig::from_toml("unknown_key = 1").is_err());
        let c = RunConfig { problem: "ex9".into(), ..Default::default() };
        assert!(matches!(c.setup(), Err(Error::Config(_))));
        let c = RunConfig {
            tolerances: ToleranceOverrides { stol_plus: Some(1e-3), stol_minus: Some(1e-2), ttol: None },
            ..Default::default()
        };
        assert_eq!(c.setup().err().unwrap().exit_code(), 2);
    }

    #[test]
    fn level_cap_defaults_per_problem() {
        let ex4 = RunConfig { problem: "ex4".into(), ..Default::default() };
        assert_eq!(ex4.setup().unwrap().options.max_level, 10);
        assert_eq!(RunConfig::default().setup().unwrap().options.max_level, 24);
        let capped = RunConfig { max_level: Some(6), ..ex4 };
        assert_eq!(capped.setup().unwrap().options.max_level, 6);
    }

    #[test]
    fn output_root_applies_to_relative_paths() {
        let c = RunConfig::default();
        assert_eq!(c.output_path(Some(Path::new("/tmp/r")), "run"), PathBuf::from("/tmp/r/ex1-run"));
        let c = RunConfig { output_dir: Some("/abs".into()), ..Default::default() };
        assert_eq!(c.output_path(Some(Path::new("/tmp/r")), "run"), PathBuf::from("/abs"));
    }
}
