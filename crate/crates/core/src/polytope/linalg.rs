//! Small dense helpers shared by the hull, vertex enumeration and distance code.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};

use super::Point;

/// Residual below which a vector is treated as linearly dependent on a basis.
pub(crate) const RANK_TOL: f64 = 1e-9;

/// Removes the components of `v` along the orthonormal `basis`, twice for stability.
pub(crate) fn orthogonalize(v: &Point, basis: &[Point]) -> Point {
    let mut r = v.clone();
    for _ in 0..2 {
        for b in basis {
            let c = r.dot(b);
            r.axpy(-c, b, 1.0);
        }
    }
    r
}

/// Tries to extend the orthonormal `basis` by `v`; returns whether it was added.
pub(crate) fn extend_basis(basis: &mut Vec<Point>, v: &Point, tol: f64) -> bool {
    let r = orthogonalize(v, basis);
    let n = r.norm();
    if n > tol {
        basis.push(r / n);
        true
    } else {
        false
    }
}

pub(crate) fn unit(dim: usize, i: usize) -> Point {
    let mut e = DVector::zeros(dim);
    e[i] = 1.0;
    e
}

/// Orthonormal basis of the orthogonal complement of the span of `basis`,
/// preferring coordinate axes so that axis-aligned inputs stay exactly axis-aligned.
pub(crate) fn complement(dim: usize, basis: &[Point]) -> Vec<Point> {
    let mut all: Vec<Point> = basis.to_vec();
    let mut out = Vec::new();
    let mut order: Vec<(usize, f64)> = (0..dim)
        .map(|i| (i, orthogonalize(&unit(dim, i), basis).norm()))
        .collect();
    // Largest residual first: axes already orthogonal to the span come out exact.
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    for (i, _) in order {
        if all.len() == dim {
            break;
        }
        let e = unit(dim, i);
        if extend_basis(&mut all, &e, 1e-6) {
            out.push(all.last().unwrap().clone());
        }
    }
    out
}

/// Re-expresses an orthonormal basis of a subspace with coordinate axes first,
/// so that subspaces containing axes are parameterised by those axes exactly.
pub(crate) fn axis_aligned_basis(dim: usize, basis: &[Point]) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(basis.len());
    for i in 0..dim {
        let e = unit(dim, i);
        if (1.0 - project_norm(&e, basis)).abs() < 1e-12 {
            out.push(e);
        }
    }
    for b in basis {
        if out.len() == basis.len() {
            break;
        }
        extend_basis(&mut out, b, 1e-6);
    }
    out
}

fn project_norm(v: &Point, basis: &[Point]) -> f64 {
    basis.iter().map(|b| b.dot(v).powi(2)).sum::<f64>().sqrt()
}

/// Unit normal of the hyperplane through `pts` (exactly `dim` points in `dim` dimensions).
pub(crate) fn hyperplane_normal(pts: &[&Point]) -> Option<Point> {
    let dim = pts[0].len();
    let mut basis = Vec::with_capacity(dim);
    for p in &pts[1..] {
        let d = *p - pts[0];
        if !extend_basis(&mut basis, &d, 1e-14 * (1.0 + d.norm())) {
            return None;
        }
    }
    let comp = complement(dim, &basis);
    comp.into_iter().next()
}

/// Solves the square system `rows · x = rhs`, rejecting near-singular systems.
pub(crate) fn solve_square(rows: &[&Point], rhs: &[f64]) -> Option<Point> {
    let n = rows.len();
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let lu = m.lu();
    let det = lu.determinant();
    if !det.is_finite() || det.abs() < 1e-10 {
        return None;
    }
    lu.solve(&DVector::from_column_slice(rhs))
}

/// Rank of a set of vectors at tolerance [`RANK_TOL`].
pub(crate) fn rank(vs: &[&Point]) -> usize {
    let mut basis = Vec::new();
    for v in vs {
        extend_basis(&mut basis, v, RANK_TOL);
    }
    basis.len()
}

pub(crate) fn lex_cmp(a: &Point, b: &Point) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

pub(crate) fn centroid(points: &[&Point]) -> Point {
    let dim = points[0].len();
    let mut c = DVector::zeros(dim);
    for p in points {
        c += *p;
    }
    c / points.len() as f64
}

/// Replaces `-0.0` and sub-tolerance noise in a unit normal by exact zeros.
pub(crate) fn clean_normal(mut n: Point) -> Point {
    for x in n.iter_mut() {
        if x.abs() < 1e-15 {
            *x = 0.0;
        }
    }
    let norm = n.norm();
    if norm > 0.0 {
        n /= norm;
    }
    n
}
