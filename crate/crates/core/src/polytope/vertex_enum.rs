//! Combinatorial halfspace-intersection routines.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};

use super::linalg::{extend_basis, solve_square, RANK_TOL};
use super::Point;

/// All feasible intersection points of `dim` halfspace boundaries, merged at `eps`.
pub(crate) fn enumerate_vertices(normals: &[Point], offsets: &[f64], eps: f64) -> Vec<Point> {
    let dim = normals[0].len();
    let mut found: Vec<Point> = Vec::new();
    for subset in (0..normals.len()).combinations(dim) {
        let rows: Vec<&Point> = subset.iter().map(|&i| &normals[i]).collect();
        let rhs: Vec<f64> = subset.iter().map(|&i| offsets[i]).collect();
        let Some(x) = solve_square(&rows, &rhs) else { continue };
        let feasible = normals.iter().zip(offsets).all(|(n, b)| n.dot(&x) <= b + eps);
        if feasible && !found.iter().any(|v| (v - &x).amax() <= eps) {
            found.push(x);
        }
    }
    found
}

/// Minimum of `b·λ` over `λ ≥ 0` with `Σ λ_i n_i = d`, searched over basic solutions.
///
/// By LP duality this is the support value of a nonempty `{x : n_i·x ≤ b_i}` in
/// direction `d`; `None` means `d` lies outside the cone of the normals, i.e. the
/// set is unbounded along `d`.
pub(crate) fn dual_support(normals: &[Point], offsets: &[f64], d: &Point) -> Option<f64> {
    let dim = d.len();
    if d.amax() == 0.0 {
        return Some(0.0);
    }
    let scale = 1.0 + d.norm();
    let mut best: Option<f64> = None;
    for size in 1..=dim.min(normals.len()) {
        for subset in (0..normals.len()).combinations(size) {
            let mut basis = Vec::with_capacity(size);
            if !subset.iter().all(|&i| extend_basis(&mut basis, &normals[i], RANK_TOL)) {
                continue;
            }
            let nt = DMatrix::from_fn(dim, size, |r, c| normals[subset[c]][r]);
            let gram = nt.transpose() * &nt;
            let Some(chol) = gram.cholesky() else { continue };
            let lambda: DVector<f64> = chol.solve(&(nt.transpose() * d));
            if lambda.iter().any(|&l| l < -1e-12 * scale) {
                continue;
            }
            if (&nt * &lambda - d).norm() > 1e-9 * scale {
                continue;
            }
            let value: f64 = subset.iter().zip(lambda.iter()).map(|(&i, l)| l.max(0.0) * offsets[i]).sum();
            best = Some(best.map_or(value, |b: f64| b.min(value)));
        }
    }
    best
}
