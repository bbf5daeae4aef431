//! Declarative experiment files (TOML).
//!
//! ```toml
//! schema_version = 1
//! task = "gauss_bonnet"
//!
//! [grid]
//! dim = 4
//! points_per_axis = 16
//!
//! [metric]
//! preset = "conformal"
//! terms = [{ amplitude = 0.1, mode = [1, 0, 0, 0], kind = "sin" }]
//!
//! [task_parameters]
//! euler_characteristic = 0
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{QlabError, Result};
use crate::field::{ScalarField, SymTensor2Field};
use crate::grid::PeriodicGrid;
use crate::io::FieldFormat;
use crate::metric::MetricField;
use crate::report::ReportFormat;
use crate::solvers::SolverOptions;
use crate::trig::{TrigKind, TrigPolynomial, TrigTerm};

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

/// Largest `Nⁿ` accepted anywhere in the harness.
pub const NODE_BUDGET: usize = 2_000_000;

/// Metric amplitudes must satisfy `Σ|amplitude| < AMPLITUDE_LIMIT`.
pub const AMPLITUDE_LIMIT: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub grid: GridSpec,
    pub metric: MetricSpec,
    pub task: TaskKind,
    #[serde(default)]
    pub task_parameters: TaskParameters,
    /// Overrides of check bounds, keyed by check name.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub points_per_axis: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetKind {
    Flat,
    /// `g = e^{2φ} δ`, `φ = Σ amplitude · trig(mode · x)`.
    Conformal,
    /// `g = δ + Σ amplitude · trig(mode · x) (e_i ⊗ e_j + e_j ⊗ e_i)/2` for each term's `component = [i, j]`.
    Perturbed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    pub preset: PresetKind,
    #[serde(default)]
    pub terms: Vec<MetricTerm>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricTerm {
    pub amplitude: f64,
    pub mode: Vec<i64>,
    #[serde(default)]
    pub kind: TrigKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub component: Option<[usize; 2]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    /// Identity battery on the scenario metric.
    Verify,
    /// Q-curvature statistics.
    Qcurv,
    /// Gauss–Bonnet–Chern against a declared Euler characteristic.
    GaussBonnet,
    /// Linear Paneitz solve for a prescribed curvature 4-form.
    PrescribeForm,
    /// Newton solve of `P φ + Q = f e^{4φ}`.
    PrescribeConformal,
    /// Implicit-function scheme `Q(g₀ + L*u) = f`.
    PrescribeFull,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Verify => "verify",
            TaskKind::Qcurv => "qcurv",
            TaskKind::GaussBonnet => "gauss_bonnet",
            TaskKind::PrescribeForm => "prescribe_form",
            TaskKind::PrescribeConformal => "prescribe_conformal",
            TaskKind::PrescribeFull => "prescribe_full",
        }
    }

    fn needs_dim4(self) -> bool {
        matches!(
            self,
            TaskKind::GaussBonnet | TaskKind::PrescribeForm | TaskKind::PrescribeConformal
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskParameters {
    /// Declared, never inferred; required by `gauss_bonnet`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub euler_characteristic: Option<i64>,
    /// `prescribe_form`: density of ω against `dvol_g`.
    /// `prescribe_conformal`: `f`. `prescribe_full`: `f − Q_{g₀}`.
    pub target: Vec<TrigTerm>,
    /// Kernel probe restarts for `verify`.
    pub probes: usize,
    /// Kernel probe iterations per restart.
    pub iterations: usize,
    /// Random pairs for the adjointness check.
    pub pairs: usize,
    pub seed: u64,
}

impl Default for TaskParameters {
    fn default() -> Self {
        Self {
            euler_characteristic: None,
            target: Vec::new(),
            probes: 1,
            iterations: 100,
            pairs: 2,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    /// Report destination; standard output when absent. Relative paths resolve against the working directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub format: ReportFormat,
    pub include_timing: bool,
    /// Optional dump of the task's primary field (Q, φ or u).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field_path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field_format: Option<FieldFormat>,
}

impl Scenario {
    /// Parses and validates; errors carry the TOML line/column or the offending field.
    pub fn parse(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| QlabError::InvalidOption(format!("scenario: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| QlabError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            QlabError::InvalidOption(m) => QlabError::InvalidOption(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(QlabError::InvalidOption(m));
        if self.schema_version != SCENARIO_SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} unsupported (this build reads {SCENARIO_SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        let grid = self.grid()?;
        if self.task.needs_dim4() && grid.dim() != 4 {
            return bad(format!(
                "task {} needs grid.dim = 4, got {}",
                self.task.name(),
                grid.dim()
            ));
        }
        let amp: f64 = self.metric.terms.iter().map(|t| t.amplitude.abs()).sum();
        match self.metric.preset {
            PresetKind::Flat if !self.metric.terms.is_empty() => {
                return bad("metric.terms must be empty for preset flat".into());
            }
            _ if !(amp < AMPLITUDE_LIMIT) => {
                return bad(format!(
                    "metric amplitudes sum to {amp}, must stay below {AMPLITUDE_LIMIT}"
                ));
            }
            _ => {}
        }
        for (i, t) in self.metric.terms.iter().enumerate() {
            if t.mode.len() != grid.dim() || !grid.resolves_mode(&t.mode) {
                return bad(format!(
                    "metric.terms[{i}]: mode {:?} must have {} entries below the Nyquist index {}",
                    t.mode,
                    grid.dim(),
                    grid.points_per_axis() / 2
                ));
            }
            match (self.metric.preset, t.component) {
                (PresetKind::Perturbed, Some([a, b])) if a >= grid.dim() || b >= grid.dim() => {
                    return bad(format!("metric.terms[{i}]: component [{a}, {b}] out of range"));
                }
                (PresetKind::Perturbed, None) => {
                    return bad(format!("metric.terms[{i}]: preset perturbed needs component = [i, j]"));
                }
                (PresetKind::Conformal, Some(_)) => {
                    return bad(format!(
                        "metric.terms[{i}]: component is only meaningful for preset perturbed"
                    ));
                }
                _ => {}
            }
        }
        self.target_polynomial()
            .validate(grid)
            .map_err(|e| QlabError::InvalidOption(format!("task_parameters.target: {e}")))?;
        if self.task == TaskKind::GaussBonnet && self.task_parameters.euler_characteristic.is_none() {
            return bad("task gauss_bonnet needs task_parameters.euler_characteristic".into());
        }
        if self.task_parameters.pairs == 0 || self.task_parameters.probes == 0 || self.task_parameters.iterations == 0 {
            return bad("task_parameters.pairs, probes and iterations must be positive".into());
        }
        for (k, v) in &self.tolerances {
            if !(v.is_finite() && *v >= 0.0) {
                return bad(format!("tolerances.{k} must be a non-negative number"));
            }
        }
        self.solver.validate()
    }

    pub fn grid(&self) -> Result<PeriodicGrid> {
        grid_within_budget(self.grid.dim, self.grid.points_per_axis)
    }

    pub fn target_polynomial(&self) -> TrigPolynomial {
        TrigPolynomial::new(self.task_parameters.target.clone())
    }

    /// Log-factor of a conformal preset.
    pub fn conformal_factor(&self, grid: PeriodicGrid) -> Option<ScalarField> {
        (self.metric.preset == PresetKind::Conformal).then(|| self.metric_polynomial().sample(grid))
    }

    fn metric_polynomial(&self) -> TrigPolynomial {
        TrigPolynomial::new(
            self.metric
                .terms
                .iter()
                .map(|t| TrigTerm::new(t.amplitude, &t.mode, t.kind))
                .collect(),
        )
    }

    pub fn build_metric(&self) -> Result<MetricField> {
        let grid = self.grid()?;
        match self.metric.preset {
            PresetKind::Flat => Ok(MetricField::flat(grid)),
            PresetKind::Conformal => Ok(MetricField::conformal(&self.metric_polynomial().sample(grid))),
            PresetKind::Perturbed => {
                let mut g = SymTensor2Field::identity(grid);
                for t in &self.metric.terms {
                    let [a, b] = t.component.expect("validated");
                    let w = TrigPolynomial::new(vec![TrigTerm::new(t.amplitude, &t.mode, t.kind)]).sample(grid);
                    let scale = if a == b { 1.0 } else { 0.5 };
                    g.component_mut(a, b)
                        .iter_mut()
                        .zip(w.values())
                        .for_each(|(c, v)| *c += scale * v);
                }
                MetricField::general(g)
            }
        }
    }

    pub fn tolerance(&self, check: &str, default: f64) -> f64 {
        self.tolerances.get(check).copied().unwrap_or(default)
    }
}

/// A grid of dimension 3 or 4 within [`NODE_BUDGET`].
pub fn grid_within_budget(dim: usize, points_per_axis: usize) -> Result<PeriodicGrid> {
    if !(3..=4).contains(&dim) {
        return Err(QlabError::InvalidOption(format!("grid.dim must be 3 or 4, got {dim}")));
    }
    let nodes = (points_per_axis as f64).powi(dim as i32);
    if nodes > NODE_BUDGET as f64 {
        return Err(QlabError::InvalidOption(format!(
            "grid {points_per_axis}^{dim} = {nodes} nodes exceeds the budget of {NODE_BUDGET}"
        )));
    }
    PeriodicGrid::new(dim, points_per_axis)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
schema_version = 1
task = "qcurv"
[grid]
dim = 4
points_per_axis = 8
[metric]
preset = "conformal"
terms = [{ amplitude = 0.1, mode = [1, 0, 0, 0], kind = "sin" }]
"#;

    #[test]
    fn parses_and_builds() {
        let s = Scenario::parse(BASE).unwrap();
        assert_eq!(s.task, TaskKind::Qcurv);
        let g = s.build_metric().unwrap();
        assert!(matches!(g.preset(), crate::metric::MetricPreset::Conformal(_)));
        assert_eq!(s.solver, SolverOptions::default());
    }

    #[test]
    fn rejects_unknown_preset_with_its_name() {
        let text = BASE.replace("\"conformal\"", "\"spherical\"");
        let e = Scenario::parse(&text).unwrap_err().to_string();
        assert!(e.contains("spherical"), "{e}");
        assert!(e.contains("line"), "{e}");
    }

    #[test]
    fn rejects_bad_inputs() {
        for (from, to) in [
            ("schema_version = 1", "schema_version = 2"),
            ("amplitude = 0.1", "amplitude = 0.6"),
            ("[1, 0, 0, 0]", "[4, 0, 0, 0]"),
            ("points_per_axis = 8", "points_per_axis = 64"),
            ("task = \"qcurv\"", "task = \"gauss_bonnet\""),
            ("task = \"qcurv\"", "task = \"qcurv\"\nbogus = 1"),
        ] {
            let text = BASE.replace(from, to);
            assert!(Scenario::parse(&text).is_err(), "{from} -> {to}");
        }
    }

    #[test]
    fn perturbed_preset_is_spd() {
        let text = r#"
schema_version = 1
task = "qcurv"
[grid]
dim = 3
points_per_axis = 8
[metric]
preset = "perturbed"
terms = [{ amplitude = 0.2, mode = [1, 1, 0], component = [0, 1] },
         { amplitude = -0.2, mode = [0, 0, 1], component = [2, 2] }]
"#;
        let g = Scenario::parse(text).unwrap().build_metric().unwrap();
        assert!(g.min_eigenvalue() > 0.5);
        assert!(g.components().component(0, 1).iter().any(|v| v.abs() > 0.05));
    }
}
