//! Analytic flexibility of a single unit: the feasible regulation interval, the
//! maximum ramp, power and energy deviations, and their per-step timeline.
//!
//! Power deviations are measured on net grid injection `u_gen − u_load`, so
//! reducing a load counts as positive flexibility. All values are deviations
//! from the nominal operating point carried by the [`NodeState`].

use serde::Serialize;
use thiserror::Error;

use crate::format::{fmt_num, CsvTable};
use crate::polytope::{Polytope, PolytopeError};
use crate::powernode::{Controllability, NodeError, NodeState, PowerNodeParams, Trajectory};
use crate::MINUTES_PER_HOUR;

/// Relative slack used when testing the nominal point against its own feasible set.
const FEAS_TOL: f64 = 1e-9;
/// Sub-steps per grid step when integrating energy deviations.
const ENERGY_SUBSTEPS: f64 = 100.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlexError {
    #[error(transparent)]
    Node(#[from] NodeError),
    #[error("nominal operating point is outside its feasible set at step {time_index}: {reason}")]
    InfeasibleNominal { time_index: usize, reason: String },
    #[error("invalid settings: {0}")]
    InvalidSettings(String),
    #[error("step {step}: {source}")]
    AtStep { step: usize, source: Box<FlexError> },
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
}

pub type Result<T> = std::result::Result<T, FlexError>;

/// Grid step and evaluation horizon, both in hours.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlexSettings {
    pub dt: f64,
    /// Energy deviations are integrated over at most this long.
    pub horizon: f64,
}

impl FlexSettings {
    pub fn new(dt: f64, horizon: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(FlexError::InvalidSettings(format!("dt must be positive, got {dt}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(FlexError::InvalidSettings(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self { dt, horizon })
    }

    fn ramp_minutes(&self) -> f64 {
        self.dt * MINUTES_PER_HOUR
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Box of maximum available flexibility around the nominal point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlexCube {
    /// MW/min.
    pub rho_plus: f64,
    pub rho_minus: f64,
    /// MW.
    pub pi_plus: f64,
    pub pi_minus: f64,
    /// MWh.
    pub eps_plus: f64,
    pub eps_minus: f64,
    /// Hours over which the energy extremes were integrated.
    pub horizon: f64,
    pub time_index: usize,
}

impl FlexCube {
    /// Lower corner in `(ρ, π, ε)` order.
    pub fn lower(&self) -> [f64; 3] {
        [self.rho_minus, self.pi_minus, self.eps_minus]
    }

    pub fn upper(&self) -> [f64; 3] {
        [self.rho_plus, self.pi_plus, self.eps_plus]
    }

    pub fn to_polytope(&self) -> Result<Polytope> {
        Ok(Polytope::from_box(&self.lower(), &self.upper())?)
    }

    pub fn contains_origin(&self) -> bool {
        self.lower().iter().all(|x| *x <= 0.0) && self.upper().iter().all(|x| *x >= 0.0)
    }

    /// Minutes needed to ramp up to `pi_plus` at `rho_plus`; `None` without ramp capability.
    pub fn ramp_duration_plus(&self) -> Option<f64> {
        (self.rho_plus > 0.0).then(|| self.pi_plus / self.rho_plus)
    }

    pub fn ramp_duration_minus(&self) -> Option<f64> {
        (self.rho_minus < 0.0).then(|| self.pi_minus / self.rho_minus)
    }

    /// The eight box corners, `(ρ, π, ε)` with the ρ bit varying fastest.
    pub fn corners(&self) -> [[f64; 3]; 8] {
        let (lo, hi) = (self.lower(), self.upper());
        std::array::from_fn(|m| std::array::from_fn(|i| if m >> i & 1 == 1 { hi[i] } else { lo[i] }))
    }
}

/// Time-indexed flexibility cubes of one unit or pool.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlexTimeline {
    pub id: String,
    pub entries: Vec<FlexCube>,
}

impl FlexTimeline {
    /// CSV with columns `k, rho_plus, rho_minus, pi_plus, pi_minus, eps_plus, eps_minus`.
    pub fn to_csv(&self) -> String {
        let mut table = CsvTable::new(&["k", "rho_plus", "rho_minus", "pi_plus", "pi_minus", "eps_plus", "eps_minus"]);
        for c in &self.entries {
            let vals = [c.rho_plus, c.rho_minus, c.pi_plus, c.pi_minus, c.eps_plus, c.eps_minus];
            table.row(std::iter::once(c.time_index.to_string()).chain(vals.map(fmt_num)));
        }
        table.finish()
    }
}

/// Feasible `(u_gen, u_load)` region for one step: a box cut by the slab
/// `s_lo ≤ u_gen/η_gen − η_load·u_load ≤ s_hi` that the storage balance allows.
#[derive(Debug, Clone, Copy)]
struct OperatingSet {
    gen: (f64, f64),
    load: (f64, f64),
    slab: (f64, f64),
    eta_gen: f64,
    eta_load: f64,
}

impl OperatingSet {
    fn slab_value(&self, g: f64, l: f64) -> f64 {
        g / self.eta_gen - self.eta_load * l
    }

    fn scale(&self) -> f64 {
        1.0 + [self.gen.1, self.load.1, self.slab.0.abs(), self.slab.1.abs()]
            .into_iter()
            .filter(|x| x.is_finite())
            .fold(0.0, f64::max)
    }

    fn contains(&self, g: f64, l: f64) -> bool {
        let tol = FEAS_TOL * self.scale();
        let s = self.slab_value(g, l);
        g >= self.gen.0 - tol
            && g <= self.gen.1 + tol
            && l >= self.load.0 - tol
            && l <= self.load.1 + tol
            && s >= self.slab.0 - tol
            && s <= self.slab.1 + tol
    }

    /// Range of net injection `g − l` over the region, by enumerating its vertices.
    fn net_range(&self) -> Option<(f64, f64)> {
        let (g0, g1) = self.gen;
        let (l0, l1) = self.load;
        let mut cands = vec![(g0, l0), (g0, l1), (g1, l0), (g1, l1)];
        for s in [self.slab.0, self.slab.1] {
            if !s.is_finite() {
                continue;
            }
            for g in [g0, g1] {
                cands.push((g, (g / self.eta_gen - s) / self.eta_load));
            }
            for l in [l0, l1] {
                cands.push((self.eta_gen * (s + self.eta_load * l), l));
            }
        }
        let nets: Vec<f64> = cands
            .into_iter()
            .filter(|&(g, l)| self.contains(g, l))
            .map(|(g, l)| g.clamp(g0, g1) - l.clamp(l0, l1))
            .collect();
        if nets.is_empty() {
            return None;
        }
        let lo = nets.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = nets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some((lo, hi))
    }

    /// Restricts the power boxes to what one step of ramping from `(g, l)` reaches.
    fn ramp_limited(mut self, params: &PowerNodeParams, g: f64, l: f64, minutes: f64) -> Self {
        let clip = |(lo, hi): (f64, f64), at: f64, rmin: f64, rmax: f64| {
            let hi2 = (at + rmax * minutes).min(hi);
            ((at + rmin * minutes).max(lo).min(hi2), hi2)
        };
        self.gen = clip(self.gen, g, params.ramp_gen_min, params.ramp_gen_max);
        self.load = clip(self.load, l, params.ramp_load_min, params.ramp_load_max);
        self
    }
}

/// Attainable range of `ξ − w` for the unit's controllability class.
fn supply_range(params: &PowerNodeParams, s: &NodeState, k: usize) -> (f64, f64) {
    match params.controllability {
        Controllability::FullyControllable => {
            (params.xi_min.at(k).min(0.0), params.xi_max.at(k).max(0.0))
        }
        Controllability::Curtailable => (s.xi.min(0.0), s.xi.max(0.0)),
        Controllability::NonControllable => (s.xi, s.xi),
    }
}

fn operating_set(params: &PowerNodeParams, s: &NodeState, dt: f64) -> OperatingSet {
    let x = s.soc;
    let (e_lo, e_hi) = supply_range(params, s, s.time_index);
    let v = params.dissipation.eval(x);
    let (drain, fill) = if params.has_storage() {
        (
            params.capacity * (x - params.soc_min).max(0.0) / dt,
            params.capacity * (params.soc_max - x).max(0.0) / dt,
        )
    } else {
        (0.0, 0.0)
    };
    OperatingSet {
        gen: (params.u_gen_min, params.u_gen_max),
        load: (params.u_load_min, params.u_load_max),
        slab: (e_lo - v - fill, e_hi - v + drain),
        eta_gen: params.eta_gen.eval(x),
        eta_load: params.eta_load.eval(x),
    }
}

fn checked_set(params: &PowerNodeParams, s: &NodeState, dt: f64) -> Result<OperatingSet> {
    params.check()?;
    let set = operating_set(params, s, dt);
    let infeasible = |reason: String| FlexError::InfeasibleNominal { time_index: s.time_index, reason };
    if params.has_storage() && !(params.soc_min - FEAS_TOL..=params.soc_max + FEAS_TOL).contains(&s.soc) {
        return Err(infeasible(format!("SOC {} outside its window", s.soc)));
    }
    if !set.contains(s.u_gen, s.u_load) {
        return Err(infeasible(format!(
            "set-point (u_gen {}, u_load {}) violates the power box or the storage balance",
            s.u_gen, s.u_load
        )));
    }
    Ok(set)
}

fn deviation_range(set: &OperatingSet, s: &NodeState) -> (f64, f64) {
    let nominal = s.u_gen - s.u_load;
    let (lo, hi) = set.net_range().unwrap_or((nominal, nominal));
    ((lo - nominal).min(0.0), (hi - nominal).max(0.0))
}

/// Interval of net-injection deviations the unit can be steered to within one step.
pub fn feasible_regulation_set(params: &PowerNodeParams, s: &NodeState, settings: &FlexSettings) -> Result<Interval> {
    let set = checked_set(params, s, settings.dt)?;
    let (lo, hi) = deviation_range(&set, s);
    Ok(Interval { lo, hi })
}

/// `(π⁺, π⁻)` in MW: the endpoints of [`feasible_regulation_set`].
pub fn max_flex_pi(params: &PowerNodeParams, s: &NodeState, settings: &FlexSettings) -> Result<(f64, f64)> {
    let i = feasible_regulation_set(params, s, settings)?;
    Ok((i.hi, i.lo))
}

/// `(ρ⁺, ρ⁻)` in MW/min: the largest one-step net-injection change allowed by both
/// the ramp bounds and the feasible power set, divided by the step length.
pub fn max_flex_rho(params: &PowerNodeParams, s: &NodeState, settings: &FlexSettings) -> Result<(f64, f64)> {
    let minutes = settings.ramp_minutes();
    let set = checked_set(params, s, settings.dt)?.ramp_limited(params, s.u_gen, s.u_load, minutes);
    let (lo, hi) = deviation_range(&set, s);
    Ok((hi / minutes, lo / minutes))
}

/// `(ε⁺, ε⁻)` in MWh: energy deviation sustained at maximum (minimum) injection
/// until an SOC bound binds or the horizon ends. Storage-less units deliver the
/// power extremes for the whole horizon.
pub fn max_flex_eps(params: &PowerNodeParams, s: &NodeState, settings: &FlexSettings) -> Result<(f64, f64)> {
    let set = checked_set(params, s, settings.dt)?;
    if !params.has_storage() {
        let (lo, hi) = deviation_range(&set, s);
        return Ok((hi * settings.horizon, lo * settings.horizon));
    }
    let up = sustained_energy(params, s, settings, (params.u_gen_max, params.u_load_min));
    let down = sustained_energy(params, s, settings, (params.u_gen_min, params.u_load_max));
    Ok((up.max(0.0), down.min(0.0)))
}

/// Integrates the deviation of holding `(g, l)` from the nominal injection.
///
/// The external process is set as close as its range allows to keeping the SOC
/// constant, so storage is only drawn on (or filled) when unavoidable.
fn sustained_energy(params: &PowerNodeParams, s: &NodeState, settings: &FlexSettings, (g, l): (f64, f64)) -> f64 {
    let dev = (g - l) - (s.u_gen - s.u_load);
    if dev == 0.0 {
        return 0.0;
    }
    let h = settings.dt / ENERGY_SUBSTEPS;
    let (mut t, mut x, mut energy) = (0.0, s.soc, 0.0);
    while t < settings.horizon {
        let k = s.time_index + (t / settings.dt) as usize;
        let (e_lo, e_hi) = supply_range(params, s, k);
        let base = params.eta_load.eval(x) * l - g / params.eta_gen.eval(x) - params.dissipation.eval(x);
        let rate = (base + (-base).clamp(e_lo, e_hi)) / params.capacity;
        let span = h.min(settings.horizon - t);
        let room = if rate < 0.0 {
            (x - params.soc_min).max(0.0) / -rate
        } else if rate > 0.0 {
            (params.soc_max - x).max(0.0) / rate
        } else {
            f64::INFINITY
        };
        if room <= span {
            energy += dev * room;
            break;
        }
        energy += dev * span;
        x += rate * span;
        t += span;
    }
    energy
}

/// All six extremes at the operating point `s`.
pub fn flex_cube(params: &PowerNodeParams, s: &NodeState, settings: &FlexSettings) -> Result<FlexCube> {
    let (pi_plus, pi_minus) = max_flex_pi(params, s, settings)?;
    let (rho_plus, rho_minus) = max_flex_rho(params, s, settings)?;
    let (eps_plus, eps_minus) = max_flex_eps(params, s, settings)?;
    Ok(FlexCube {
        rho_plus,
        rho_minus,
        pi_plus,
        pi_minus,
        eps_plus,
        eps_minus,
        horizon: settings.horizon,
        time_index: s.time_index,
    })
}

/// Nominal operating point at step `k`: the SOC reached at `k` with the set-points
/// scheduled over step `k`.
pub fn nominal_at(traj: &Trajectory, k: usize) -> NodeState {
    let next = &traj.states[k + 1];
    NodeState { soc: traj.states[k].soc, time_index: k, ..*next }
}

/// One cube per scheduled step of `traj`.
pub fn flex_timeline(
    id: &str,
    params: &PowerNodeParams,
    traj: &Trajectory,
    settings: &FlexSettings,
) -> Result<FlexTimeline> {
    let entries = (0..traj.states.len().saturating_sub(1))
        .map(|k| {
            flex_cube(params, &nominal_at(traj, k), settings)
                .map_err(|e| FlexError::AtStep { step: k, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FlexTimeline { id: id.to_string(), entries })
}
