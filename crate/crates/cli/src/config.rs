//! Experiment configuration files.
//!
//! Configs are TOML. Structural problems (syntax, unknown keys, wrong
//! types) are reported by the parser with line and column; every semantic
//! problem is collected and reported together.

use std::collections::HashSet;
use std::path::Path;

use ase_lab::analytic::gamma_integral;
use ase_lab::models::check_feasibility;
use ase_lab::numerics::QuadSettings;
use ase_lab::sim::{validate_grid, SimConfig, DEFAULT_MAX_EXPECTED_POINTS, MIN_EXPECTED_POINTS};
use ase_lab::{FadingModel, PathLossModel};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_REALIZATIONS: usize = 100_000;
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Feasibility,
    Limit,
    Conditions,
    Simulate,
    Sweep,
}

impl Command {
    fn needs_feasible_model(self) -> bool {
        !matches!(self, Command::Feasibility | Command::Conditions)
    }
}

/// Options of the `conditions` command.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionsConfig {
    /// Start of the checked range; defaults to the built-in pair.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
    /// Lower bound `L̃`; defaults to the built-in pair.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower_bound: Option<PathLossModel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda0_grid: Option<Vec<f64>>,
    /// Also evaluate the double integral and `E[I^-2]` per probe.
    #[serde(default)]
    pub corollary1: bool,
}

/// One experiment. Scalars come before tables so the resolved form
/// serializes as valid TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_grid: Option<Vec<f64>>,
    /// SINR thresholds, linear scale.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realizations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_expected_points: Option<f64>,
    /// Relative tolerance of `γ` and the limit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    pub model: PathLossModel,
    #[serde(default = "default_fading")]
    pub fading: FadingModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditions: Option<ConditionsConfig>,
}

fn default_fading() -> FadingModel {
    FadingModel::Rayleigh
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation(vec![e.to_string()]))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(vec![format!("cannot read {}: {e}", path.display())]))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn realizations(&self) -> usize {
        self.realizations.unwrap_or(DEFAULT_REALIZATIONS)
    }

    pub fn theta0(&self) -> Vec<f64> {
        self.theta0.clone().unwrap_or_else(|| vec![1.0])
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or(DEFAULT_TOLERANCE)
    }

    pub fn n0(&self) -> f64 {
        self.n0.unwrap_or_else(|| {
            let l0 = self.model.l_zero();
            if l0.is_finite() {
                1e-6 * l0
            } else {
                1e-6
            }
        })
    }

    /// Fills every default so the echoed config is self-contained.
    pub fn resolve(mut self, command: Command) -> Self {
        self.theta0 = Some(self.theta0());
        self.seed = Some(self.seed());
        self.realizations = Some(self.realizations());
        self.tolerance = Some(self.tolerance());
        if self.model.validate().is_ok() {
            self.n0 = Some(self.n0());
        }
        if matches!(command, Command::Simulate | Command::Sweep) {
            self.max_expected_points.get_or_insert(DEFAULT_MAX_EXPECTED_POINTS);
        }
        if command == Command::Conditions {
            self.conditions.get_or_insert_with(ConditionsConfig::default);
        }
        self
    }

    /// Every semantic problem for `command`.
    pub fn validate(&self, command: Command) -> Result<(), CliError> {
        let mut errors = Vec::new();
        let model_ok = match self.model.validate() {
            Ok(()) => true,
            Err(e) => {
                errors.push(format!("model: {e}"));
                false
            }
        };
        if let Err(e) = self.fading.validate() {
            errors.push(format!("fading: {e}"));
        }
        let positive = |name: &str, v: f64, errors: &mut Vec<String>| {
            if !(v.is_finite() && v > 0.0) {
                errors.push(format!("{name} must be positive and finite, got {v}"));
            }
        };
        if let Some(l) = self.lambda {
            positive("lambda", l, &mut errors);
        }
        if let Some(n0) = self.n0 {
            positive("n0", n0, &mut errors);
        }
        if let Some(r) = self.window_radius {
            positive("window_radius", r, &mut errors);
        }
        if let Some(m) = self.max_expected_points {
            if !(m.is_finite() && m >= MIN_EXPECTED_POINTS) {
                errors.push(format!("max_expected_points must be >= {MIN_EXPECTED_POINTS}, got {m}"));
            }
        }
        if let Some(t) = self.tolerance {
            if QuadSettings::with_tol(t).validate().is_err() {
                errors.push(format!("tolerance must lie in (1e-14, 1e-2), got {t}"));
            }
        }
        if self.realizations() < 100 {
            errors.push(format!("realizations must be >= 100, got {}", self.realizations()));
        }
        if self.seed() > i64::MAX as u64 {
            errors.push(format!("seed must be <= {}, got {}", i64::MAX, self.seed()));
        }
        let theta0 = self.theta0();
        if theta0.is_empty() {
            errors.push("theta0 must not be empty".into());
        }
        let mut labels = HashSet::new();
        for &t in &theta0 {
            if !(t.is_finite() && t >= 0.0) {
                errors.push(format!("theta0 entries must be >= 0, got {t}"));
            } else if !labels.insert(crate::report::db_label(t)) {
                errors.push(format!("theta0 entry {t} duplicates the column label {}", crate::report::db_label(t)));
            }
        }

        match command {
            Command::Simulate => match self.lambda {
                None => errors.push("simulate needs `lambda`".into()),
                Some(l) => self.check_window(l, &mut errors),
            },
            Command::Sweep => match &self.lambda_grid {
                None => errors.push("sweep needs `lambda_grid`".into()),
                Some(grid) => {
                    if let Err(e) = validate_grid(grid) {
                        errors.push(format!("lambda_grid: {e}"));
                    }
                    for &l in grid {
                        self.check_window(l, &mut errors);
                    }
                }
            },
            _ => {}
        }

        if let Some(c) = &self.conditions {
            if let Some(r0) = c.r0 {
                positive("conditions.r0", r0, &mut errors);
            }
            if let Some(lb) = &c.lower_bound {
                if let Err(e) = lb.validate() {
                    errors.push(format!("conditions.lower_bound: {e}"));
                }
                if !lb.is_deterministic() {
                    errors.push("conditions.lower_bound must be deterministic in distance".into());
                }
            }
            if let Some(grid) = &c.lambda0_grid {
                if grid.is_empty() || !grid.iter().all(|l| l.is_finite() && *l > 0.0) {
                    errors.push("conditions.lambda0_grid must hold positive densities".into());
                } else if !grid.windows(2).all(|w| w[0] < w[1]) {
                    errors.push("conditions.lambda0_grid must be ascending".into());
                }
            }
        }

        if model_ok && command.needs_feasible_model() {
            if let Some(msg) = feasibility_problem(&self.model, self.tolerance().clamp(1e-13, 1e-3)) {
                errors.push(msg);
            }
        }

        if errors.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(errors))
        }
    }

    fn check_window(&self, lambda: f64, errors: &mut Vec<String>) {
        if let Some(r) = self.window_radius {
            if lambda.is_finite() && lambda > 0.0 && lambda * std::f64::consts::PI * r * r < MIN_EXPECTED_POINTS {
                errors.push(format!(
                    "window_radius {r} holds fewer than {MIN_EXPECTED_POINTS} expected base stations at lambda {lambda}"
                ));
            }
        }
    }

    pub fn sim_config(&self, lambda: f64) -> SimConfig {
        let mut cfg = SimConfig::new(self.model.clone(), self.fading.clone(), lambda);
        cfg.n0 = self.n0();
        cfg.window_radius = self.window_radius;
        cfg.max_expected_points = self.max_expected_points.unwrap_or(DEFAULT_MAX_EXPECTED_POINTS);
        cfg.realizations = self.realizations();
        cfg.seed = self.seed();
        cfg.theta0 = self.theta0();
        cfg
    }
}

/// Load-time feasibility pre-check for commands that need a finite limit.
fn feasibility_problem(model: &PathLossModel, tol: f64) -> Option<String> {
    let report = match check_feasibility(model, &QuadSettings::with_tol(tol)) {
        Ok(r) => r,
        Err(e) => return Some(format!("model: {e}")),
    };
    match report.failed_property {
        Some(1) => Some("model: L0 is unbounded (property 1)".into()),
        Some(2) => Some(format!(
            "model: gain exceeds L0 at r={} (property 2)",
            report.bound_witness.unwrap_or(f64::NAN)
        )),
        Some(_) => Some("model: γ diverges, the area integral of r L(r) is infinite (property 3)".into()),
        None => gamma_integral(model, tol).err().map(|e| format!("model: {e}")),
    }
}
