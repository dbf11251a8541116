//! Time-indexed reachable flexibility under the ramp → power → energy chain.
//!
//! The state is `(π, ε)`; the ramp-rate ρ is the input. One step maps
//!
//! ```text
//! π' = π + ramp_dt·ρ
//! ε' = (1 − γ·dt)·ε + dt·π
//! ```
//!
//! and the image is clipped to the power/energy box. For reporting, a state set
//! is lifted to `(ρ, π, ε)` by attaching every ramp-rate that keeps the next
//! power inside its bounds.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::flexmetrics::FlexCube;
use crate::polytope::{minkowski_sum, HPolytope, Point, Polytope, PolytopeError};
use crate::tolerance::geom_eps;
use crate::MINUTES_PER_HOUR;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReachError {
    #[error("invalid dynamics: {0}")]
    InvalidDynamics(String),
    #[error("reachable set is empty at step {step}")]
    EmptySet { step: usize },
    #[error("point is not reachable at step {step}")]
    Unreachable { step: usize },
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
}

pub type Result<T> = std::result::Result<T, ReachError>;

/// Discrete double-integrator with box constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlexDynamics {
    /// Step length in hours, used for the energy integration.
    pub dt: f64,
    /// Step length in the ramp-rate's time unit, used for the power update.
    pub ramp_dt: f64,
    /// Storage-loss drain on the energy deviation, per hour.
    pub gamma: f64,
    pub ramp: (f64, f64),
    pub power: (f64, f64),
    pub energy: (f64, f64),
}

impl FlexDynamics {
    pub fn new(
        dt: f64,
        ramp_dt: f64,
        gamma: f64,
        ramp: (f64, f64),
        power: (f64, f64),
        energy: (f64, f64),
    ) -> Result<Self> {
        let bad = |m: String| Err(ReachError::InvalidDynamics(m));
        if !(dt > 0.0 && dt.is_finite() && ramp_dt > 0.0 && ramp_dt.is_finite()) {
            return bad(format!("step lengths must be positive, got {dt} and {ramp_dt}"));
        }
        if !(gamma >= 0.0 && gamma * dt < 1.0) {
            return bad(format!("need 0 <= gamma and gamma*dt < 1, got gamma = {gamma}"));
        }
        for (name, (lo, hi)) in [("ramp", ramp), ("power", power), ("energy", energy)] {
            if !(lo <= hi && lo.is_finite() && hi.is_finite()) {
                return bad(format!("{name} box [{lo}, {hi}] is empty or unbounded"));
            }
        }
        Ok(Self { dt, ramp_dt, gamma, ramp, power, energy })
    }

    /// Dynamics whose boxes are the cube's extremes; ramp-rates are per minute and `dt` in hours.
    pub fn from_cube(cube: &FlexCube, dt: f64, gamma: f64) -> Result<Self> {
        Self::new(
            dt,
            dt * MINUTES_PER_HOUR,
            gamma,
            (cube.rho_minus, cube.rho_plus),
            (cube.pi_minus, cube.pi_plus),
            (cube.eps_minus, cube.eps_plus),
        )
    }

    /// The input × state box as a cube (no horizon attached).
    pub fn as_cube(&self) -> FlexCube {
        FlexCube {
            rho_plus: self.ramp.1,
            rho_minus: self.ramp.0,
            pi_plus: self.power.1,
            pi_minus: self.power.0,
            eps_plus: self.energy.1,
            eps_minus: self.energy.0,
            horizon: f64::INFINITY,
            time_index: 0,
        }
    }

    pub fn max_cube(&self) -> Result<Polytope> {
        Ok(Polytope::from_box(
            &[self.ramp.0, self.power.0, self.energy.0],
            &[self.ramp.1, self.power.1, self.energy.1],
        )?)
    }

    fn state_box(&self) -> Result<HPolytope> {
        Ok(HPolytope::from_box(&[self.power.0, self.energy.0], &[self.power.1, self.energy.1])?)
    }

    fn decay(&self) -> f64 {
        1.0 - self.gamma * self.dt
    }

    /// Next state from `(π, ε)` under ramp-rate `rho`.
    pub fn advance(&self, pi: f64, eps: f64, rho: f64) -> (f64, f64) {
        (pi + self.ramp_dt * rho, self.decay() * eps + self.dt * pi)
    }
}

/// Reachable set after `step` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachSet {
    pub step: usize,
    /// Reachable `(π, ε)` states.
    pub state: Polytope,
    /// `(ρ, π, ε)` lift of `state`.
    pub poly: Polytope,
}

impl ReachSet {
    /// The planned operating point: zero deviation.
    pub fn origin(dynamics: &FlexDynamics) -> Result<Self> {
        Self::from_state(dynamics, 0, Polytope::point(Point::zeros(2))?)
    }

    /// Starts from an arbitrary set of `(π, ε)` deviations.
    pub fn from_state(dynamics: &FlexDynamics, step: usize, state: Polytope) -> Result<Self> {
        if state.dim() != 2 {
            return Err(PolytopeError::DimensionMismatch(state.dim(), 2).into());
        }
        let poly = lift(dynamics, &state).map_err(|e| match e {
            ReachError::Polytope(PolytopeError::Infeasible) => ReachError::EmptySet { step },
            e => e,
        })?;
        Ok(Self { step, state, poly })
    }
}

/// `{(ρ, π, ε) : (π, ε) ∈ state, ρ in its box, π + ramp_dt·ρ within the power bounds}`.
fn lift(d: &FlexDynamics, state: &Polytope) -> Result<Polytope> {
    let h = state.hrep();
    let mut normals: Vec<Point> = h.normals().iter().map(|n| DVector::from_vec(vec![0.0, n[0], n[1]])).collect();
    let mut offsets = h.offsets().to_vec();
    normals.push(DVector::from_vec(vec![1.0, 0.0, 0.0]));
    offsets.push(d.ramp.1);
    normals.push(DVector::from_vec(vec![-1.0, 0.0, 0.0]));
    offsets.push(-d.ramp.0);
    normals.push(DVector::from_vec(vec![d.ramp_dt, 1.0, 0.0]));
    offsets.push(d.power.1);
    normals.push(DVector::from_vec(vec![-d.ramp_dt, -1.0, 0.0]));
    offsets.push(-d.power.0);
    Ok(Polytope::from_hrep(&HPolytope::new(3, normals, offsets)?)?)
}

/// One propagation step.
pub fn reach_step(dynamics: &FlexDynamics, r: &ReachSet) -> Result<ReachSet> {
    let d = dynamics;
    let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, d.dt, d.decay()]);
    let moved = r.state.map_linear(&a)?;
    let input = Polytope::from_points(vec![
        DVector::from_vec(vec![d.ramp_dt * d.ramp.0, 0.0]),
        DVector::from_vec(vec![d.ramp_dt * d.ramp.1, 0.0]),
    ])?;
    let image = minkowski_sum(&moved, &input)?;
    let step = r.step + 1;
    let clipped = image.hrep().intersect(&d.state_box()?)?;
    let state = match Polytope::from_hrep(&clipped) {
        Ok(p) => p,
        Err(PolytopeError::Infeasible) => return Err(ReachError::EmptySet { step }),
        Err(e) => return Err(e.into()),
    };
    ReachSet::from_state(d, step, state)
}

/// `R_1, …, R_k_max` from the origin. Stops early once consecutive sets are
/// within `10·ε_geom` in Hausdorff distance; the last entry is then the limit.
pub fn reach_until(dynamics: &FlexDynamics, k_max: usize) -> Result<Vec<ReachSet>> {
    if k_max == 0 {
        return Err(ReachError::InvalidDynamics("k_max must be at least 1".into()));
    }
    let mut out: Vec<ReachSet> = Vec::with_capacity(k_max);
    let mut current = ReachSet::origin(dynamics)?;
    for _ in 0..k_max {
        let next = reach_step(dynamics, &current)?;
        let converged = current.step > 0 && next.poly.hausdorff(&current.poly) < 10.0 * geom_eps();
        out.push(next.clone());
        if converged {
            break;
        }
        current = next;
    }
    Ok(out)
}

/// Distance from one cube corner to a reach set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRow {
    /// Corner label such as `rho+ pi- eps+`.
    pub corner: String,
    pub point: [f64; 3],
    /// Euclidean distance in `(ρ, π, ε)`.
    pub distance: f64,
    /// Distance of the corner's `(π, ε)` part to the reachable states.
    pub state_gap: f64,
    /// Whether the corner is within `10·ε_geom` of the set.
    pub reached: bool,
}

/// Gap between each of the eight cube corners and `final_set`.
pub fn gap_report(final_set: &ReachSet, cube: &FlexCube) -> Vec<GapRow> {
    let tol = 10.0 * geom_eps();
    cube.corners()
        .iter()
        .enumerate()
        .map(|(m, c)| {
            let sign = |bit: usize| if m >> bit & 1 == 1 { '+' } else { '-' };
            let corner = format!("rho{} pi{} eps{}", sign(0), sign(1), sign(2));
            let distance = final_set.poly.distance_to(&DVector::from_row_slice(c));
            let state_gap = final_set.state.distance_to(&DVector::from_vec(vec![c[1], c[2]]));
            GapRow { corner, point: *c, distance, state_gap, reached: distance <= tol }
        })
        .collect()
}

/// Ramp-rate sequence `ρ_0 … ρ_k` that steers the origin to `target = (ρ_k, π_k, ε_k)`
/// through the given sets, where `sets[j]` is the reach set after `j + 1` steps.
///
/// Each backward step picks the midpoint of the feasible input interval, so the
/// sequence is a witness that `target` is reachable.
pub fn witness_inputs(dynamics: &FlexDynamics, sets: &[ReachSet], target: &[f64; 3]) -> Result<Vec<f64>> {
    let d = dynamics;
    let k = sets.len();
    let slack = 10.0 * geom_eps();
    let mut inputs = vec![target[0]];
    let (mut pi, mut eps) = (target[1], target[2]);
    for j in (0..k).rev() {
        // Predecessor as a function of the input: (π − ramp_dt·ρ, (ε − dt·π_prev)/decay).
        let (pi_c, pi_s) = (pi, -d.ramp_dt);
        let (eps_c, eps_s) = ((eps - d.dt * pi_c) / d.decay(), -d.dt * pi_s / d.decay());
        let (mut lo, mut hi) = d.ramp;
        let prev = if j == 0 { None } else { Some(sets[j - 1].state.hrep()) };
        if let Some(h) = prev {
            for (n, b) in h.normals().iter().zip(h.offsets()) {
                let c0 = n[0] * pi_c + n[1] * eps_c;
                let c1 = n[0] * pi_s + n[1] * eps_s;
                let rhs = b - c0;
                if c1.abs() < 1e-15 {
                    if rhs < -slack * (1.0 + b.abs()) {
                        return Err(ReachError::Unreachable { step: j + 1 });
                    }
                } else if c1 > 0.0 {
                    hi = hi.min(rhs / c1);
                } else {
                    lo = lo.max(rhs / c1);
                }
            }
        } else {
            // The predecessor is the origin: solve for the single input exactly.
            let rho = pi / d.ramp_dt;
            lo = rho;
            hi = rho;
        }
        // Rounding can cross the bounds by a hair; the midpoint then splits the difference.
        if lo > hi + slack * (1.0 + lo.abs().max(hi.abs())) {
            return Err(ReachError::Unreachable { step: j + 1 });
        }
        let rho = 0.5 * (lo + hi);
        inputs.push(rho);
        pi = pi_c + pi_s * rho;
        eps = eps_c + eps_s * rho;
    }
    inputs.reverse();
    Ok(inputs)
}

/// Replays `inputs` from the origin; returns the visited `(π, ε)` states, origin included.
pub fn replay(dynamics: &FlexDynamics, inputs: &[f64]) -> Vec<(f64, f64)> {
    let mut states = vec![(0.0, 0.0)];
    for &rho in inputs.iter().take(inputs.len().saturating_sub(1)) {
        let (pi, eps) = *states.last().unwrap();
        states.push(dynamics.advance(pi, eps, rho));
    }
    states
}
