//! Operational flexibility of power-system units and unit pools.
//!
//! Units are described as Power Nodes (storage state, conversion efficiencies,
//! external process, curtailment and dissipation). From a unit's state the crate
//! derives its ramp-rate / power / energy flexibility as a box ("flexibility
//! cube") or, taking the ramp → power → energy integrator chain into account,
//! as time-indexed reach polytopes. Pools are aggregated with Minkowski sums
//! and checked against a needed-flexibility envelope with Pontryagin
//! differences.
//!
//! All flexibility volumes use the axis order `(ρ, π, ε)`: ramp-rate in MW/min,
//! power in MW and energy in MWh, measured as deviations from the nominal
//! operating point. Time steps are in hours.

pub mod cli;
pub mod ensemble;
pub mod flexmetrics;
pub mod format;
pub mod polytope;
pub mod powernode;
pub mod reach;
pub mod scenario;
mod tolerance;

pub use ensemble::{
    adequacy, aggregate_cubes, aggregate_polytopes, needed_envelope, remaining_flex, Adequacy,
    DisturbanceEnvelope, EnsembleError, FlexAxis, Pool,
};
pub use flexmetrics::{
    feasible_regulation_set, flex_cube, flex_timeline, max_flex_eps, max_flex_pi, max_flex_rho,
    nominal_at, FlexCube, FlexError, FlexSettings, FlexTimeline, Interval,
};
pub use polytope::{
    contains, hrep_to_vrep, minkowski_sum, pontryagin_diff, support, volume, vrep_to_hrep,
    HPolytope, Point, Polytope, PolytopeError, VPolytope, Zonotope,
};
pub use powernode::{
    simulate, step, validate, ConstraintTag, Controllability, Controls, NodeError, NodeState,
    PowerNodeParams, Profile, PwaCurve, SimulationError, Trajectory, Violation,
};
pub use reach::{
    gap_report, reach_step, reach_until, replay, witness_inputs, FlexDynamics, GapRow, ReachError,
    ReachSet,
};
pub use scenario::{load_scenario, Grid, InitialState, Scenario, ScenarioError, Schedule, Unit};
pub use tolerance::{geom_eps, BALANCE_EPS, DEFAULT_GEOM_EPS};

/// Minutes per hour; ramp-rates are quoted per minute, time steps in hours.
pub const MINUTES_PER_HOUR: f64 = 60.0;
