//! Helpers shared by the integration test targets: seeded randomness,
//! brute-force geometric oracles and random unit generators.
#![allow(dead_code)]

use flexcube::{Controllability, Controls, FlexDynamics, NodeState, Point, PowerNodeParams, Profile, PwaCurve};
use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn p3(x: f64, y: f64, z: f64) -> Point {
    DVector::from_vec(vec![x, y, z])
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize, scale: f64, center: [f64; 3]) -> Vec<Point> {
    (0..n)
        .map(|_| {
            p3(
                center[0] + scale * rng.random_range(-1.0..1.0),
                center[1] + scale * rng.random_range(-1.0..1.0),
                center[2] + scale * rng.random_range(-1.0..1.0),
            )
        })
        .collect()
}

/// Supporting planes of `conv(points)` found by testing every point triple:
/// `(unit normal, offset)` with all points on the non-positive side.
pub fn brute_force_facets(points: &[Point], tol: f64) -> Vec<(Vector3<f64>, f64)> {
    let pts: Vec<Vector3<f64>> = points.iter().map(|p| Vector3::new(p[0], p[1], p[2])).collect();
    let mut out = Vec::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            for k in j + 1..pts.len() {
                let n = (pts[j] - pts[i]).cross(&(pts[k] - pts[i]));
                let len = n.norm();
                if len < 1e-9 {
                    continue;
                }
                let n = n / len;
                let b = n.dot(&pts[i]);
                let side: Vec<f64> = pts.iter().map(|p| n.dot(p) - b).collect();
                if side.iter().all(|&s| s <= tol) {
                    out.push((n, b));
                }
                if side.iter().all(|&s| s >= -tol) {
                    out.push((-n, -b));
                }
            }
        }
    }
    out
}

/// Largest violation of `points` against a list of halfspaces.
pub fn max_violation(facets: &[(Vector3<f64>, f64)], points: &[Point]) -> f64 {
    points
        .iter()
        .flat_map(|p| {
            let v = Vector3::new(p[0], p[1], p[2]);
            facets.iter().map(move |(n, b)| n.dot(&v) - b)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest violation of `points` against an H-representation.
pub fn hrep_violation(h: &flexcube::HPolytope, points: &[Point]) -> f64 {
    points
        .iter()
        .flat_map(|p| h.normals().iter().zip(h.offsets()).map(move |(n, b)| n.dot(p) - b))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Convex hull of planar points, counter-clockwise (Andrew's monotone chain).
///
/// Coordinates are snapped to a 1e-12 grid first so that copies of a vertex
/// differing in the last bits cannot break the chain's ordering.
pub fn hull_2d(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let snap = |x: f64| (x * 1e12).round() / 1e12;
    let mut pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (snap(x), snap(y))).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0) };
    ((p.0 - a.0 - t * dx).powi(2) + (p.1 - a.1 - t * dy).powi(2)).sqrt()
}

/// Euclidean distance from `p` to the convex polygon `hull` (counter-clockwise).
pub fn polygon_distance(hull: &[(f64, f64)], p: (f64, f64)) -> f64 {
    match hull.len() {
        0 => f64::INFINITY,
        1 => segment_distance(p, hull[0], hull[0]),
        2 => segment_distance(p, hull[0], hull[1]),
        n => {
            let inside = (0..n).all(|i| {
                let (a, b) = (hull[i], hull[(i + 1) % n]);
                (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0) >= 0.0
            });
            if inside {
                0.0
            } else {
                (0..n).map(|i| segment_distance(p, hull[i], hull[(i + 1) % n])).fold(f64::INFINITY, f64::min)
            }
        }
    }
}

/// Efficiency curve over SOC: constant or with one interior breakpoint.
pub fn random_eta(rng: &mut ChaCha8Rng) -> PwaCurve {
    if rng.random_bool(0.5) {
        PwaCurve::constant(rng.random_range(0.6..=1.0))
    } else {
        PwaCurve::new(vec![
            (0.0, rng.random_range(0.6..=1.0)),
            (rng.random_range(0.2..0.8), rng.random_range(0.6..=1.0)),
            (1.0, rng.random_range(0.6..=1.0)),
        ])
        .unwrap()
    }
}

/// Attainable range of `ξ − w`, read off the curtailment rules: `w` shares the sign
/// of `ξ` and never exceeds it, so `ξ − w` lies between 0 and `ξ`.
pub fn supply_interval(params: &PowerNodeParams, s: &NodeState) -> (f64, f64) {
    let k = s.time_index;
    match params.controllability {
        Controllability::FullyControllable => (params.xi_min.at(k).min(0.0), params.xi_max.at(k).max(0.0)),
        Controllability::Curtailable => (s.xi.min(0.0), s.xi.max(0.0)),
        Controllability::NonControllable => (s.xi, s.xi),
    }
}

/// Balance without the external process: `η_load·l − g/η_gen − v`.
pub fn base_balance(params: &PowerNodeParams, soc: f64, g: f64, l: f64) -> f64 {
    params.eta_load.eval(soc) * l - g / params.eta_gen.eval(soc) - params.dissipation.eval(soc)
}

/// Interval of `ξ − w` that keeps the next SOC in its window (or balances a
/// storage-less unit), intersected with the attainable supply.
pub fn supply_window(params: &PowerNodeParams, s: &NodeState, g: f64, l: f64, dt: f64) -> Option<(f64, f64)> {
    let b0 = base_balance(params, s.soc, g, l);
    let (lo, hi) = if params.capacity > 0.0 {
        let c = params.capacity / dt;
        (c * (params.soc_min - s.soc) - b0, c * (params.soc_max - s.soc) - b0)
    } else {
        (-b0 - 1e-7, -b0 + 1e-7)
    };
    let (e_lo, e_hi) = supply_interval(params, s);
    let (lo, hi) = (lo.max(e_lo), hi.min(e_hi));
    (lo <= hi).then_some((lo, hi))
}

/// `(ξ, w)` realizing the net supply `e`.
pub fn realize(params: &PowerNodeParams, s: &NodeState, e: f64) -> (f64, f64) {
    match params.controllability {
        Controllability::FullyControllable => {
            let k = s.time_index;
            let xi = e.clamp(params.xi_min.at(k), params.xi_max.at(k));
            (xi, xi - e)
        }
        Controllability::Curtailable => (s.xi, s.xi - e),
        Controllability::NonControllable => (s.xi, 0.0),
    }
}

/// Applies `(g, l)` from `s` without ramping, picking the supply in the middle
/// of its admissible window; `None` if no admissible supply exists.
pub fn try_operate(params: &PowerNodeParams, s: &NodeState, g: f64, l: f64, dt: f64) -> Option<Result<NodeState, flexcube::NodeError>> {
    let (lo, hi) = supply_window(params, s, g, l, dt)?;
    let e = if params.capacity > 0.0 { 0.5 * (lo + hi) } else { -base_balance(params, s.soc, g, l) };
    let (xi, w) = realize(params, s, e);
    let from = NodeState { u_gen: g, u_load: l, ..*s };
    Some(flexcube::step(params, &from, &Controls { u_gen: g, u_load: l, w }, xi, dt))
}

/// A random unit with a feasible nominal operating point.
pub fn random_unit(rng: &mut ChaCha8Rng, dt: f64) -> (PowerNodeParams, NodeState) {
    loop {
        let kind = rng.random_range(0..4);
        let storage = kind < 2;
        let mut p = PowerNodeParams {
            capacity: if storage { rng.random_range(0.5..20.0) } else { 0.0 },
            eta_gen: random_eta(rng),
            eta_load: random_eta(rng),
            dissipation: PwaCurve::constant(if storage { rng.random_range(0.0..0.2) } else { 0.0 }),
            soc_min: if storage { rng.random_range(0.0..0.3) } else { 0.0 },
            soc_max: if storage { rng.random_range(0.7..=1.0) } else { 1.0 },
            ..Default::default()
        };
        p.u_gen_max = rng.random_range(1.0..50.0);
        p.u_gen_min = if rng.random_bool(0.3) { rng.random_range(0.0..0.5) * p.u_gen_max } else { 0.0 };
        if kind != 2 {
            p.u_load_max = rng.random_range(1.0..50.0);
            p.u_load_min = if rng.random_bool(0.2) { rng.random_range(0.0..0.3) * p.u_load_max } else { 0.0 };
        }
        let scale = p.u_gen_max.max(p.u_load_max);
        p.controllability = match kind {
            1 => [Controllability::Curtailable, Controllability::NonControllable][rng.random_range(0..2)],
            _ => Controllability::FullyControllable,
        };
        let (lo, hi) = match kind {
            // Storage-less units need a supply range wide enough to balance the box.
            2 => (rng.random_range(0.0..0.5) * scale, rng.random_range(1.0..3.0) * scale / 0.6),
            3 => (-rng.random_range(1.0..3.0) * scale, rng.random_range(1.0..3.0) * scale / 0.6),
            _ => (-rng.random_range(0.0..1.0) * scale, rng.random_range(0.0..1.0) * scale),
        };
        p.xi_min = Profile::Constant(lo);
        p.xi_max = Profile::Constant(hi);
        if p.check().is_err() {
            continue;
        }
        let mut s = NodeState {
            soc: rng.random_range(p.soc_min..=p.soc_max),
            u_gen: rng.random_range(p.u_gen_min..=p.u_gen_max),
            u_load: rng.random_range(p.u_load_min..=p.u_load_max),
            xi: 0.0,
            w: 0.0,
            time_index: 0,
        };
        if p.controllability != Controllability::FullyControllable {
            s.xi = rng.random_range(-1.0..1.0) * scale;
        }
        if let Some(Ok(next)) = try_operate(&p, &s, s.u_gen, s.u_load, dt) {
            s.xi = next.xi;
            s.w = next.w;
            return (p, s);
        }
    }
}

/// `(π_k, ε_k)` reachable in `k` steps, from the vertices of the polytope of
/// admissible input sequences (every subset of `k` tight constraints).
pub fn input_polytope_states(d: &FlexDynamics, k: usize) -> Vec<(f64, f64)> {
    let decay = 1.0 - d.gamma * d.dt;
    // Power and energy after step j as linear maps of the input sequence.
    let mut pi_rows = vec![vec![0.0; k]];
    let mut eps_rows = vec![vec![0.0; k]];
    for j in 0..k {
        let mut pi = pi_rows[j].clone();
        pi[j] += d.ramp_dt;
        let eps: Vec<f64> = (0..k).map(|i| decay * eps_rows[j][i] + d.dt * pi_rows[j][i]).collect();
        pi_rows.push(pi);
        eps_rows.push(eps);
    }
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..k {
        let mut e = vec![0.0; k];
        e[i] = 1.0;
        rows.push((e.clone(), d.ramp.1));
        rows.push((e.iter().map(|x| -x).collect(), -d.ramp.0));
    }
    for j in 1..=k {
        rows.push((pi_rows[j].clone(), d.power.1));
        rows.push((pi_rows[j].iter().map(|x| -x).collect(), -d.power.0));
        rows.push((eps_rows[j].clone(), d.energy.1));
        rows.push((eps_rows[j].iter().map(|x| -x).collect(), -d.energy.0));
    }
    let mut out = Vec::new();
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        let a = DMatrix::from_fn(k, k, |r, c| rows[subset[r]].0[c]);
        let b = DVector::from_fn(k, |r, _| rows[subset[r]].1);
        if let Some(x) = a.clone().lu().solve(&b) {
            let residual = (&a * &x - &b).norm();
            let feasible = rows.iter().all(|(n, off)| n.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>() <= off + 1e-9);
            if residual < 1e-9 && feasible {
                let dot = |r: &[f64]| r.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>();
                out.push((dot(&pi_rows[k]), dot(&eps_rows[k])));
            }
        }
        // Next k-subset in lexicographic order.
        let m = rows.len();
        let Some(i) = (0..k).rev().find(|&i| subset[i] < m - k + i) else { break };
        subset[i] += 1;
        for j in i + 1..k {
            subset[j] = subset[j - 1] + 1;
        }
    }
    out
}
