//! Power Node unit model: storage state, conversion efficiencies, external
//! process, curtailment and dissipation.
//!
//! The continuous balance
//! `C·dx/dt = η_load·u_load − u_gen/η_gen + ξ − w − v(x)` is stepped with
//! forward Euler. Storage-less units (`C = 0`) must balance instantaneously.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::format::{fmt_num, CsvTable};
use crate::tolerance::BALANCE_EPS;
use crate::MINUTES_PER_HOUR;

/// Absolute slack allowed on SOC, power and ramp bounds before a value counts as a breach.
const BOUND_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NodeError {
    #[error("invalid parameters: {tag}: {reason}")]
    InvalidParams { tag: ConstraintTag, reason: String },
    #[error("state of charge {soc} would leave [{min}, {max}]")]
    SocOutOfBounds { soc: f64, min: f64, max: f64 },
    #[error("{which} ramp of {rate} MW/min outside [{min}, {max}]")]
    RampViolation { which: &'static str, rate: f64, min: f64, max: f64 },
    #[error("{which} power {value} MW outside [{min}, {max}]")]
    PowerBoundViolation { which: &'static str, value: f64, min: f64, max: f64 },
    #[error("curtailment {w} MW has the opposite sign of the external process {xi} MW")]
    CurtailmentSignViolation { xi: f64, w: f64 },
    #[error("curtailment {w} MW exceeds the external process {xi} MW")]
    CurtailmentExceedsProcess { xi: f64, w: f64 },
    #[error("external process {xi} MW outside [{min}, {max}]")]
    XiOutOfBounds { xi: f64, min: f64, max: f64 },
    #[error("curtailment {w} MW requested on a non-controllable unit")]
    NotControllable { w: f64 },
    #[error("storage-less unit is out of balance by {residual} MW")]
    BalanceViolation { residual: f64 },
    #[error("time step must be positive and finite, got {0}")]
    InvalidStep(f64),
}

/// Piecewise-affine function of the state of charge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PwaRepr", into = "PwaRepr")]
pub struct PwaCurve {
    breakpoints: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PwaRepr {
    Constant(f64),
    Points(Vec<[f64; 2]>),
}

impl TryFrom<PwaRepr> for PwaCurve {
    type Error = String;

    fn try_from(r: PwaRepr) -> Result<Self, String> {
        match r {
            PwaRepr::Constant(c) => Ok(Self::constant(c)),
            PwaRepr::Points(p) => Self::new(p.into_iter().map(|[x, y]| (x, y)).collect()),
        }
    }
}

impl From<PwaCurve> for PwaRepr {
    fn from(c: PwaCurve) -> Self {
        match c.as_constant() {
            Some(v) => PwaRepr::Constant(v),
            None => PwaRepr::Points(c.breakpoints.iter().map(|&(x, y)| [x, y]).collect()),
        }
    }
}

impl PwaCurve {
    /// Breakpoints must be finite, strictly increasing in x and span `[0, 1]`.
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self, String> {
        if breakpoints.len() < 2 {
            return Err("a curve needs at least two breakpoints".into());
        }
        if breakpoints.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err("breakpoints must be finite".into());
        }
        if breakpoints.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err("breakpoints must be strictly increasing".into());
        }
        if breakpoints[0].0 != 0.0 || breakpoints[breakpoints.len() - 1].0 != 1.0 {
            return Err("breakpoints must span [0, 1]".into());
        }
        Ok(Self { breakpoints })
    }

    pub fn constant(value: f64) -> Self {
        Self { breakpoints: vec![(0.0, value), (1.0, value)] }
    }

    /// Straight line from `(0, at_zero)` to `(1, at_one)`.
    pub fn linear(at_zero: f64, at_one: f64) -> Self {
        Self { breakpoints: vec![(0.0, at_zero), (1.0, at_one)] }
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    pub fn as_constant(&self) -> Option<f64> {
        let y0 = self.breakpoints[0].1;
        (self.breakpoints.len() == 2 && self.breakpoints[1].1 == y0).then_some(y0)
    }

    /// Linear interpolation; arguments outside `[0, 1]` are clamped.
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let i = self.breakpoints.partition_point(|p| p.0 <= x).clamp(1, self.breakpoints.len() - 1);
        let (x0, y0) = self.breakpoints[i - 1];
        let (x1, y1) = self.breakpoints[i];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Lipschitz constant: the steepest segment slope.
    pub fn max_slope(&self) -> f64 {
        self.breakpoints
            .windows(2)
            .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
            .fold(0.0, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.breakpoints.iter().map(|p| p.1).fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.breakpoints.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A value that is either constant or given per time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Profile {
    Constant(f64),
    Series(Vec<f64>),
}

impl Profile {
    /// Value at step `k`; series hold their last value beyond the end.
    pub fn at(&self, k: usize) -> f64 {
        match self {
            Profile::Constant(v) => *v,
            Profile::Series(s) => s.get(k).or(s.last()).copied().unwrap_or(0.0),
        }
    }

    /// Number of samples, or `None` for a constant.
    pub fn series_len(&self) -> Option<usize> {
        match self {
            Profile::Constant(_) => None,
            Profile::Series(s) => Some(s.len()),
        }
    }

    fn values(&self) -> &[f64] {
        match self {
            Profile::Constant(v) => std::slice::from_ref(v),
            Profile::Series(s) => s,
        }
    }
}

/// Which of the external process ξ and the curtailment w are decision variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Controllability {
    /// ξ is chosen within `[xi_min(k), xi_max(k)]`; w is free within the sign rules.
    #[default]
    FullyControllable,
    /// ξ is exogenous; only w is free.
    Curtailable,
    /// ξ is exogenous and w is fixed at zero.
    NonControllable,
}

/// Physical constants and constraint boxes of one unit. Powers in MW, ramps in
/// MW/min, capacity in MWh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerNodeParams {
    pub capacity: f64,
    pub eta_gen: PwaCurve,
    pub eta_load: PwaCurve,
    pub dissipation: PwaCurve,
    pub u_gen_min: f64,
    pub u_gen_max: f64,
    pub u_load_min: f64,
    pub u_load_max: f64,
    pub ramp_gen_min: f64,
    pub ramp_gen_max: f64,
    pub ramp_load_min: f64,
    pub ramp_load_max: f64,
    pub xi_min: Profile,
    pub xi_max: Profile,
    pub soc_min: f64,
    pub soc_max: f64,
    pub controllability: Controllability,
}

impl Default for PowerNodeParams {
    fn default() -> Self {
        Self {
            capacity: 0.0,
            eta_gen: PwaCurve::constant(1.0),
            eta_load: PwaCurve::constant(1.0),
            dissipation: PwaCurve::constant(0.0),
            u_gen_min: 0.0,
            u_gen_max: 0.0,
            u_load_min: 0.0,
            u_load_max: 0.0,
            ramp_gen_min: f64::NEG_INFINITY,
            ramp_gen_max: f64::INFINITY,
            ramp_load_min: f64::NEG_INFINITY,
            ramp_load_max: f64::INFINITY,
            xi_min: Profile::Constant(0.0),
            xi_max: Profile::Constant(0.0),
            soc_min: 0.0,
            soc_max: 1.0,
            controllability: Controllability::FullyControllable,
        }
    }
}

impl PowerNodeParams {
    /// Checks the static parameter invariants.
    pub fn check(&self) -> Result<(), NodeError> {
        let bad = |tag, reason: &str| Err(NodeError::InvalidParams { tag, reason: reason.into() });
        if !(self.capacity >= 0.0 && self.capacity.is_finite()) {
            return bad(ConstraintTag::Soc, "capacity must be finite and non-negative");
        }
        if !(0.0 <= self.soc_min && self.soc_min <= self.soc_max && self.soc_max <= 1.0) {
            return bad(ConstraintTag::Soc, "need 0 <= soc_min <= soc_max <= 1");
        }
        if !(0.0 <= self.u_gen_min && self.u_gen_min <= self.u_gen_max && self.u_gen_max.is_finite()) {
            return bad(ConstraintTag::GenPower, "need 0 <= u_gen_min <= u_gen_max < inf");
        }
        if !(0.0 <= self.u_load_min && self.u_load_min <= self.u_load_max && self.u_load_max.is_finite()) {
            return bad(ConstraintTag::LoadPower, "need 0 <= u_load_min <= u_load_max < inf");
        }
        // Holding a set-point must always be allowed, so the ramp box straddles zero.
        if !(self.ramp_gen_min <= 0.0 && 0.0 <= self.ramp_gen_max) {
            return bad(ConstraintTag::GenRamp, "need ramp_gen_min <= 0 <= ramp_gen_max");
        }
        if !(self.ramp_load_min <= 0.0 && 0.0 <= self.ramp_load_max) {
            return bad(ConstraintTag::LoadRamp, "need ramp_load_min <= 0 <= ramp_load_max");
        }
        for (name, curve) in [("eta_gen", &self.eta_gen), ("eta_load", &self.eta_load)] {
            if !(curve.min_value() > 0.0 && curve.max_value() <= 1.0) {
                return bad(ConstraintTag::Soc, &format!("{name} must lie in (0, 1]"));
            }
        }
        if self.dissipation.min_value() < 0.0 {
            return bad(ConstraintTag::Dissipation, "dissipation must be non-negative");
        }
        let (lo, hi) = (self.xi_min.values(), self.xi_max.values());
        if lo.iter().chain(hi).any(|v| !v.is_finite()) {
            return bad(ConstraintTag::XiBounds, "xi bounds must be finite");
        }
        let n = lo.len().max(hi.len());
        if (0..n).any(|k| self.xi_min.at(k) > self.xi_max.at(k)) {
            return bad(ConstraintTag::XiBounds, "need xi_min <= xi_max");
        }
        Ok(())
    }

    /// Whether the unit can store energy.
    pub fn has_storage(&self) -> bool {
        self.capacity > 0.0
    }

    /// Grid balance term `η_load·u_load − u_gen/η_gen + ξ − w − v(x)` in MW.
    pub fn balance(&self, soc: f64, c: &Controls, xi: f64) -> f64 {
        self.eta_load.eval(soc) * c.u_load - c.u_gen / self.eta_gen.eval(soc) + xi
            - c.w
            - self.dissipation.eval(soc)
    }
}

/// Set-points applied over one step.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Controls {
    pub u_gen: f64,
    pub u_load: f64,
    pub w: f64,
}

/// State of a unit at a grid instant, together with the set-points and
/// process values that were in effect over the step leading to it.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NodeState {
    pub soc: f64,
    pub u_gen: f64,
    pub u_load: f64,
    pub xi: f64,
    pub w: f64,
    pub time_index: usize,
}

impl NodeState {
    pub fn controls(&self) -> Controls {
        Controls { u_gen: self.u_gen, u_load: self.u_load, w: self.w }
    }
}

/// One constraint of the unit model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstraintTag {
    /// (a) state of charge within its window.
    Soc,
    /// (b) generation power bounds.
    GenPower,
    /// (c) load power bounds.
    LoadPower,
    /// (d) generation ramp bounds.
    GenRamp,
    /// (e) load ramp bounds.
    LoadRamp,
    /// (f) curtailment has the sign of the external process.
    CurtailmentSign,
    /// (g) curtailment does not exceed the external process.
    CurtailmentMagnitude,
    /// (h) dissipation is non-negative.
    Dissipation,
    /// Controllable external process within `[xi_min, xi_max]`.
    XiBounds,
    /// Curtailment on a unit that cannot curtail.
    Gating,
}

impl ConstraintTag {
    /// Short label: `a`–`h` for the model constraints, names for the rest.
    pub fn label(self) -> &'static str {
        match self {
            ConstraintTag::Soc => "a",
            ConstraintTag::GenPower => "b",
            ConstraintTag::LoadPower => "c",
            ConstraintTag::GenRamp => "d",
            ConstraintTag::LoadRamp => "e",
            ConstraintTag::CurtailmentSign => "f",
            ConstraintTag::CurtailmentMagnitude => "g",
            ConstraintTag::Dissipation => "h",
            ConstraintTag::XiBounds => "xi_bounds",
            ConstraintTag::Gating => "gating",
        }
    }
}

impl fmt::Display for ConstraintTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.label())
    }
}

/// A violated constraint and by how much it is violated (always positive).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub tag: ConstraintTag,
    pub slack: f64,
}

fn excess(value: f64, lo: f64, hi: f64) -> f64 {
    (lo - value).max(value - hi).max(0.0)
}

/// Lists every violated constraint of `s`. Ramp constraints are checked when the
/// preceding state and the step length are supplied.
pub fn validate(params: &PowerNodeParams, s: &NodeState, prev: Option<(&NodeState, f64)>) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut flag = |tag, slack: f64| {
        if slack > BOUND_TOL || slack.is_nan() {
            out.push(Violation { tag, slack });
        }
    };
    flag(ConstraintTag::Soc, excess(s.soc, params.soc_min, params.soc_max));
    flag(ConstraintTag::GenPower, excess(s.u_gen, params.u_gen_min, params.u_gen_max));
    flag(ConstraintTag::LoadPower, excess(s.u_load, params.u_load_min, params.u_load_max));
    if let Some((p, dt)) = prev {
        let minutes = dt * MINUTES_PER_HOUR;
        flag(
            ConstraintTag::GenRamp,
            excess((s.u_gen - p.u_gen) / minutes, params.ramp_gen_min, params.ramp_gen_max),
        );
        flag(
            ConstraintTag::LoadRamp,
            excess((s.u_load - p.u_load) / minutes, params.ramp_load_min, params.ramp_load_max),
        );
    }
    flag(ConstraintTag::CurtailmentSign, (-(s.xi * s.w)).max(0.0));
    flag(ConstraintTag::CurtailmentMagnitude, (s.w.abs() - s.xi.abs()).max(0.0));
    flag(ConstraintTag::Dissipation, (-params.dissipation.eval(s.soc)).max(0.0));
    if params.controllability == Controllability::FullyControllable {
        let k = s.time_index;
        flag(ConstraintTag::XiBounds, excess(s.xi, params.xi_min.at(k), params.xi_max.at(k)));
    }
    if params.controllability == Controllability::NonControllable {
        flag(ConstraintTag::Gating, s.w.abs());
    }
    out
}

/// Advances `s` by one forward-Euler step of length `dt` hours.
///
/// Dissipation and efficiencies are evaluated at the starting SOC. A step
/// that would leave the SOC window fails instead of clamping.
pub fn step(
    params: &PowerNodeParams,
    s: &NodeState,
    controls: &Controls,
    xi: f64,
    dt: f64,
) -> Result<NodeState, NodeError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(NodeError::InvalidStep(dt));
    }
    let Controls { u_gen, u_load, w } = *controls;
    if excess(u_gen, params.u_gen_min, params.u_gen_max) > BOUND_TOL {
        return Err(NodeError::PowerBoundViolation {
            which: "generation",
            value: u_gen,
            min: params.u_gen_min,
            max: params.u_gen_max,
        });
    }
    if excess(u_load, params.u_load_min, params.u_load_max) > BOUND_TOL {
        return Err(NodeError::PowerBoundViolation {
            which: "load",
            value: u_load,
            min: params.u_load_min,
            max: params.u_load_max,
        });
    }
    let minutes = dt * MINUTES_PER_HOUR;
    let gen_rate = (u_gen - s.u_gen) / minutes;
    if excess(gen_rate, params.ramp_gen_min, params.ramp_gen_max) > BOUND_TOL {
        return Err(NodeError::RampViolation {
            which: "generation",
            rate: gen_rate,
            min: params.ramp_gen_min,
            max: params.ramp_gen_max,
        });
    }
    let load_rate = (u_load - s.u_load) / minutes;
    if excess(load_rate, params.ramp_load_min, params.ramp_load_max) > BOUND_TOL {
        return Err(NodeError::RampViolation {
            which: "load",
            rate: load_rate,
            min: params.ramp_load_min,
            max: params.ramp_load_max,
        });
    }
    if xi * w < 0.0 {
        return Err(NodeError::CurtailmentSignViolation { xi, w });
    }
    if w.abs() > xi.abs() + BOUND_TOL {
        return Err(NodeError::CurtailmentExceedsProcess { xi, w });
    }
    let k = s.time_index;
    match params.controllability {
        Controllability::FullyControllable => {
            let (lo, hi) = (params.xi_min.at(k), params.xi_max.at(k));
            if excess(xi, lo, hi) > BOUND_TOL {
                return Err(NodeError::XiOutOfBounds { xi, min: lo, max: hi });
            }
        }
        Controllability::NonControllable if w != 0.0 => return Err(NodeError::NotControllable { w }),
        _ => {}
    }

    let b = params.balance(s.soc, controls, xi);
    let soc = if params.has_storage() {
        let next = s.soc + dt * b / params.capacity;
        if excess(next, params.soc_min, params.soc_max) > BOUND_TOL {
            return Err(NodeError::SocOutOfBounds { soc: next, min: params.soc_min, max: params.soc_max });
        }
        next
    } else {
        if b.abs() > BALANCE_EPS {
            return Err(NodeError::BalanceViolation { residual: b });
        }
        s.soc
    };
    Ok(NodeState { soc, u_gen, u_load, xi, w, time_index: k + 1 })
}

/// States of a simulated unit: `states[0]` is the initial state and
/// `states[k + 1]` results from applying the k-th scheduled controls.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub states: Vec<NodeState>,
}

/// Simulation stopped at the first infeasible step.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("step {step}: {source}")]
pub struct SimulationError {
    pub step: usize,
    pub source: NodeError,
    /// States up to and including the last feasible one.
    pub partial: Trajectory,
}

/// Applies `schedule` step by step. `xi` holds the realized external process per step.
pub fn simulate(
    params: &PowerNodeParams,
    initial: &NodeState,
    schedule: &[Controls],
    xi: &[f64],
    dt: f64,
) -> Result<Trajectory, SimulationError> {
    let mut states = Vec::with_capacity(schedule.len() + 1);
    states.push(*initial);
    let fail = |step, source, states: Vec<NodeState>| SimulationError {
        step,
        source,
        partial: Trajectory { dt, states },
    };
    if schedule.len() != xi.len() {
        return Err(fail(
            0,
            NodeError::InvalidParams {
                tag: ConstraintTag::XiBounds,
                reason: format!("{} controls but {} process values", schedule.len(), xi.len()),
            },
            states,
        ));
    }
    for (k, (c, x)) in schedule.iter().zip(xi).enumerate() {
        match step(params, &states[k], c, *x, dt) {
            Ok(next) => states.push(next),
            Err(e) => return Err(fail(k, e, states)),
        }
    }
    Ok(Trajectory { dt, states })
}

impl Trajectory {
    /// CSV with columns `t, x, u_gen, u_load, xi, w, v`; `t` in hours, `v` at the row's SOC.
    pub fn to_csv(&self, params: &PowerNodeParams) -> String {
        let mut table = CsvTable::new(&["t", "x", "u_gen", "u_load", "xi", "w", "v"]);
        for s in &self.states {
            let row = [
                s.time_index as f64 * self.dt,
                s.soc,
                s.u_gen,
                s.u_load,
                s.xi,
                s.w,
                params.dissipation.eval(s.soc),
            ];
            table.row(row.map(fmt_num));
        }
        table.finish()
    }

    /// Energy balance of every step, `Σ dt·balance` in MWh, summed in step order.
    pub fn energy_throughput(&self, params: &PowerNodeParams) -> f64 {
        self.states
            .windows(2)
            .map(|w| self.dt * params.balance(w[0].soc, &w[1].controls(), w[1].xi))
            .sum()
    }
}
