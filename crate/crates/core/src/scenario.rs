//! Scenario files: units, schedules, process forecasts, disturbances, pools and
//! the time grid, stored as versioned TOML.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ensemble::Pool;
use crate::flexmetrics::{FlexError, FlexSettings};
use crate::powernode::{
    simulate, validate, ConstraintTag, Controls, NodeState, PowerNodeParams, Profile, SimulationError, Trajectory,
};

/// The only schema version this crate reads and writes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<usize>, message: String },
    #[error("unsupported schema_version {0} (expected {SCHEMA_VERSION})")]
    SchemaVersionUnsupported(u32),
    #[error("{}", validation_message(unit, tag, reason))]
    Validation { unit: String, tag: Option<ConstraintTag>, reason: String },
    #[error("unknown {kind} {id}")]
    Unknown { kind: &'static str, id: String },
}

fn validation_message(unit: &str, tag: &Option<ConstraintTag>, reason: &str) -> String {
    match tag {
        Some(t) => format!("{unit}: constraint {t}: {reason}"),
        None => format!("{unit}: {reason}"),
    }
}

pub type Result<T> = std::result::Result<T, ScenarioError>;

/// Time grid: `steps` steps of `dt` hours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub dt: f64,
    /// Energy evaluation horizon and disturbance window, hours.
    pub horizon: f64,
    pub k_max: usize,
    pub steps: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self { dt: 0.25, horizon: 24.0, k_max: 15, steps: 96 }
    }
}

/// Initial operating point of a unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialState {
    pub soc: f64,
    pub u_gen: f64,
    pub u_load: f64,
    pub xi: f64,
    pub w: f64,
}

impl Default for InitialState {
    fn default() -> Self {
        Self { soc: 0.5, u_gen: 0.0, u_load: 0.0, xi: 0.0, w: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unit {
    #[serde(flatten)]
    pub params: PowerNodeParams,
    /// Storage-loss drain applied to energy deviations in reach sets, per hour.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub dissipation_gamma: f64,
    #[serde(default)]
    pub initial: InitialState,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

/// Per-step set-points. Missing series hold the initial value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schedule {
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub u_gen: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub u_load: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub w: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default)]
    pub grid: Grid,
    #[serde(default)]
    pub units: BTreeMap<String, Unit>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub schedules: BTreeMap<String, Schedule>,
    /// Realized external process per unit and step; missing units hold `initial.xi`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub xi_forecasts: BTreeMap<String, Vec<f64>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub disturbances: BTreeMap<String, Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pools: Vec<Pool>,
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
    Scenario::from_toml_str(&text)
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| ScenarioError::Parse {
            line: e.span().map(|s| text[..s.start].matches('\n').count() + 1),
            message: e.message().to_string(),
        })?;
        scenario.check()?;
        Ok(scenario)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario values are always representable in TOML")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml_string())
            .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })
    }

    /// Checks every cross-reference, series length and unit constraint.
    pub fn check(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ScenarioError::SchemaVersionUnsupported(self.schema_version));
        }
        let g = &self.grid;
        let grid_err = |reason: String| ScenarioError::Validation { unit: "grid".into(), tag: None, reason };
        if !(g.dt > 0.0 && g.dt.is_finite()) {
            return Err(grid_err(format!("dt must be positive, got {}", g.dt)));
        }
        if !(g.horizon > 0.0 && g.horizon.is_finite()) {
            return Err(grid_err(format!("horizon must be positive, got {}", g.horizon)));
        }
        if g.steps == 0 || g.k_max == 0 {
            return Err(grid_err("steps and k_max must be at least 1".into()));
        }
        let len_check = |owner: &str, what: &str, n: usize| {
            if n == g.steps {
                Ok(())
            } else {
                Err(ScenarioError::Validation {
                    unit: owner.to_string(),
                    tag: None,
                    reason: format!("{what} has {n} values, grid has {} steps", g.steps),
                })
            }
        };
        for (id, u) in &self.units {
            u.params.check().map_err(|e| match e {
                crate::powernode::NodeError::InvalidParams { tag, reason } => {
                    ScenarioError::Validation { unit: id.clone(), tag: Some(tag), reason }
                }
                other => ScenarioError::Validation { unit: id.clone(), tag: None, reason: other.to_string() },
            })?;
            for (name, p) in [("xi_min", &u.params.xi_min), ("xi_max", &u.params.xi_max)] {
                if let Profile::Series(s) = p {
                    len_check(id, name, s.len())?;
                }
            }
            if !(u.dissipation_gamma >= 0.0 && u.dissipation_gamma * g.dt < 1.0) {
                return Err(ScenarioError::Validation {
                    unit: id.clone(),
                    tag: None,
                    reason: "need 0 <= dissipation_gamma < 1/dt".into(),
                });
            }
            if let Some(v) = validate(&u.params, &self.initial_state(id)?, None).first() {
                return Err(ScenarioError::Validation {
                    unit: id.clone(),
                    tag: Some(v.tag),
                    reason: format!("initial state violates the constraint by {}", v.slack),
                });
            }
        }
        for (id, s) in &self.schedules {
            self.unit(id)?;
            for (name, v) in [("u_gen", &s.u_gen), ("u_load", &s.u_load), ("w", &s.w)] {
                if !v.is_empty() {
                    len_check(id, name, v.len())?;
                }
            }
        }
        for (id, v) in &self.xi_forecasts {
            self.unit(id)?;
            len_check(id, "xi forecast", v.len())?;
        }
        for (id, v) in &self.disturbances {
            len_check(id, "disturbance", v.len())?;
        }
        for p in &self.pools {
            p.check().map_err(|e| ScenarioError::Validation { unit: p.id.clone(), tag: None, reason: e.to_string() })?;
            for m in &p.members {
                self.unit(m)?;
            }
            if let Some(d) = &p.disturbance {
                if !self.disturbances.contains_key(d) {
                    return Err(ScenarioError::Unknown { kind: "disturbance", id: d.clone() });
                }
            }
        }
        Ok(())
    }

    pub fn unit(&self, id: &str) -> Result<&Unit> {
        self.units.get(id).ok_or_else(|| ScenarioError::Unknown { kind: "unit", id: id.to_string() })
    }

    pub fn pool(&self, id: &str) -> Result<&Pool> {
        self.pools
            .iter()
            .find(|p| p.id == id)
            .ok_or_else(|| ScenarioError::Unknown { kind: "pool", id: id.to_string() })
    }

    pub fn initial_state(&self, id: &str) -> Result<NodeState> {
        let i = self.unit(id)?.initial;
        Ok(NodeState { soc: i.soc, u_gen: i.u_gen, u_load: i.u_load, xi: i.xi, w: i.w, time_index: 0 })
    }

    /// Controls and realized external process for every grid step.
    pub fn unit_inputs(&self, id: &str) -> Result<(Vec<Controls>, Vec<f64>)> {
        let init = self.unit(id)?.initial;
        let n = self.grid.steps;
        let empty = Schedule::default();
        let sched = self.schedules.get(id).unwrap_or(&empty);
        let pick = |v: &[f64], k: usize, default: f64| if v.is_empty() { default } else { v[k] };
        let controls = (0..n)
            .map(|k| Controls {
                u_gen: pick(&sched.u_gen, k, init.u_gen),
                u_load: pick(&sched.u_load, k, init.u_load),
                w: pick(&sched.w, k, init.w),
            })
            .collect();
        let xi = match self.xi_forecasts.get(id) {
            Some(v) => v.clone(),
            None => vec![init.xi; n],
        };
        Ok((controls, xi))
    }

    /// Runs the unit's schedule over the whole grid.
    pub fn simulate_unit(&self, id: &str) -> std::result::Result<Trajectory, SimulationError> {
        let unit = self.unit(id).expect("caller passes a known unit id");
        let (controls, xi) = self.unit_inputs(id).expect("caller passes a known unit id");
        let init = self.initial_state(id).expect("caller passes a known unit id");
        simulate(&unit.params, &init, &controls, &xi, self.grid.dt)
    }

    pub fn flex_settings(&self, horizon: Option<f64>) -> std::result::Result<FlexSettings, FlexError> {
        FlexSettings::new(self.grid.dt, horizon.unwrap_or(self.grid.horizon))
    }

    /// Steps covered by `hours`, at least one.
    pub fn steps_in(&self, hours: f64) -> usize {
        ((hours / self.grid.dt).round() as usize).max(1)
    }
}
