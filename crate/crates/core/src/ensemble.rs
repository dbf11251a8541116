//! Pool flexibility: aggregation of unit volumes, the flexibility needed to
//! absorb a disturbance, and what remains once that need is reserved.

use std::collections::HashSet;
use std::fmt;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flexmetrics::FlexCube;
use crate::polytope::{minkowski_sum, pontryagin_diff, Polytope, PolytopeError};
use crate::tolerance::geom_eps;
use crate::MINUTES_PER_HOUR;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnsembleError {
    #[error("nothing to aggregate")]
    NoMembers,
    #[error("pool {0} has no members")]
    EmptyPool(String),
    #[error("pool {pool} lists member {member} twice")]
    DuplicateMember { pool: String, member: String },
    #[error("cubes are evaluated at different time indices ({0} and {1})")]
    MixedTimeIndex(usize, usize),
    #[error("cubes are evaluated over different horizons ({0} h and {1} h)")]
    MixedHorizon(f64, f64),
    #[error("disturbance series is empty")]
    EmptySeries,
    #[error("time step must be positive, got {0}")]
    InvalidStep(f64),
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
}

pub type Result<T> = std::result::Result<T, EnsembleError>;

/// Units aggregated together, assumed to sit in one grid zone without internal limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pool {
    pub id: String,
    pub members: Vec<String>,
    #[serde(default)]
    pub zone_label: String,
    /// Name of the disturbance series the pool must absorb.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disturbance: Option<String>,
}

impl Pool {
    pub fn check(&self) -> Result<()> {
        if self.members.is_empty() {
            return Err(EnsembleError::EmptyPool(self.id.clone()));
        }
        let mut seen = HashSet::new();
        for m in &self.members {
            if !seen.insert(m) {
                return Err(EnsembleError::DuplicateMember { pool: self.id.clone(), member: m.clone() });
            }
        }
        Ok(())
    }
}

/// One signed axis of the `(ρ, π, ε)` space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum FlexAxis {
    #[serde(rename = "rho+")]
    RhoPlus,
    #[serde(rename = "rho-")]
    RhoMinus,
    #[serde(rename = "pi+")]
    PiPlus,
    #[serde(rename = "pi-")]
    PiMinus,
    #[serde(rename = "eps+")]
    EpsPlus,
    #[serde(rename = "eps-")]
    EpsMinus,
}

impl FlexAxis {
    pub const ALL: [FlexAxis; 6] = [
        FlexAxis::RhoPlus,
        FlexAxis::RhoMinus,
        FlexAxis::PiPlus,
        FlexAxis::PiMinus,
        FlexAxis::EpsPlus,
        FlexAxis::EpsMinus,
    ];

    pub fn label(self) -> &'static str {
        match self {
            FlexAxis::RhoPlus => "rho+",
            FlexAxis::RhoMinus => "rho-",
            FlexAxis::PiPlus => "pi+",
            FlexAxis::PiMinus => "pi-",
            FlexAxis::EpsPlus => "eps+",
            FlexAxis::EpsMinus => "eps-",
        }
    }

    /// Unit direction of the axis.
    pub fn direction(self) -> DVector<f64> {
        let (i, s) = match self {
            FlexAxis::RhoPlus => (0, 1.0),
            FlexAxis::RhoMinus => (0, -1.0),
            FlexAxis::PiPlus => (1, 1.0),
            FlexAxis::PiMinus => (1, -1.0),
            FlexAxis::EpsPlus => (2, 1.0),
            FlexAxis::EpsMinus => (2, -1.0),
        };
        let mut d = DVector::zeros(3);
        d[i] = s;
        d
    }
}

impl fmt::Display for FlexAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Tightest `(ρ, π, ε)` box around a disturbance series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisturbanceEnvelope {
    pub needed: FlexCube,
    pub source: String,
}

/// Componentwise sum of the six extremes.
pub fn aggregate_cubes(cubes: &[FlexCube]) -> Result<FlexCube> {
    let first = cubes.first().ok_or(EnsembleError::NoMembers)?;
    let mut agg = FlexCube { rho_plus: 0.0, rho_minus: 0.0, pi_plus: 0.0, pi_minus: 0.0, eps_plus: 0.0, eps_minus: 0.0, ..*first };
    for c in cubes {
        if c.time_index != first.time_index {
            return Err(EnsembleError::MixedTimeIndex(first.time_index, c.time_index));
        }
        if c.horizon != first.horizon {
            return Err(EnsembleError::MixedHorizon(first.horizon, c.horizon));
        }
        agg.rho_plus += c.rho_plus;
        agg.rho_minus += c.rho_minus;
        agg.pi_plus += c.pi_plus;
        agg.pi_minus += c.pi_minus;
        agg.eps_plus += c.eps_plus;
        agg.eps_minus += c.eps_minus;
    }
    Ok(agg)
}

/// Minkowski sum of all member volumes, folded left to right.
pub fn aggregate_polytopes(vols: &[Polytope]) -> Result<Polytope> {
    let (first, rest) = vols.split_first().ok_or(EnsembleError::NoMembers)?;
    rest.iter()
        .try_fold(first.clone(), |acc, p| minkowski_sum(&acc, p))
        .map_err(Into::into)
}

/// Envelope of a disturbance sampled every `dt` hours, the first sample covering
/// `[0, dt)`. The series is taken to start from zero, so the step onto the first
/// sample counts as a ramp.
pub fn needed_envelope(series: &[f64], dt: f64, source: &str) -> Result<DisturbanceEnvelope> {
    if series.is_empty() {
        return Err(EnsembleError::EmptySeries);
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(EnsembleError::InvalidStep(dt));
    }
    let minutes = dt * MINUTES_PER_HOUR;
    let (mut rho, mut pi, mut eps) = ((0.0f64, 0.0f64), (0.0f64, 0.0f64), (0.0f64, 0.0f64));
    let (mut prev, mut energy) = (0.0, 0.0);
    for &x in series {
        let r = (x - prev) / minutes;
        rho = (rho.0.min(r), rho.1.max(r));
        pi = (pi.0.min(x), pi.1.max(x));
        energy += dt * x;
        eps = (eps.0.min(energy), eps.1.max(energy));
        prev = x;
    }
    Ok(DisturbanceEnvelope {
        needed: FlexCube {
            rho_plus: rho.1,
            rho_minus: rho.0,
            pi_plus: pi.1,
            pi_minus: pi.0,
            eps_plus: eps.1,
            eps_minus: eps.0,
            horizon: dt * series.len() as f64,
            time_index: 0,
        },
        source: source.to_string(),
    })
}

/// Outcome of checking available against needed flexibility.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Adequacy {
    pub covered: bool,
    /// Axes along which the need reaches further than what is available.
    pub deficit_axes: Vec<FlexAxis>,
}

pub fn adequacy(available: &Polytope, needed: &Polytope) -> Result<Adequacy> {
    let covered = crate::polytope::contains(available, needed)?;
    let eps = geom_eps();
    let deficit_axes = if available.dim() == 3 {
        FlexAxis::ALL
            .into_iter()
            .filter(|a| {
                let d = a.direction();
                needed.support(&d) > available.support(&d) + eps
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(Adequacy { covered, deficit_axes })
}

/// Flexibility left after reserving `needed`: `available ⊖ needed`, or `None` when
/// nothing remains.
pub fn remaining_flex(available: &Polytope, needed: &Polytope) -> Result<Option<Polytope>> {
    let h = pontryagin_diff(available.hrep(), needed)?;
    if h.is_empty()? {
        return Ok(None);
    }
    match Polytope::from_hrep(&h) {
        Ok(p) => Ok(Some(p)),
        Err(PolytopeError::Infeasible) => Ok(None),
        Err(e) => Err(e.into()),
    }
}
