//! Convex hull of a finite point set in up to six dimensions.
//!
//! The point set is first reduced to its affine hull. Inside that subspace an
//! incremental (beneath-beyond) hull is grown from a maximal simplex, always
//! inserting the point farthest outside the current hull. Facets are kept as
//! simplices; coplanar simplices are merged when the halfspaces are emitted.

use std::collections::BTreeMap;

use nalgebra::DVector;

use super::linalg::{
    axis_aligned_basis, centroid, clean_normal, complement, extend_basis, hyperplane_normal,
    lex_cmp, orthogonalize, rank,
};
use super::Point;

/// Tolerance for merging facet normals that describe the same supporting plane.
const NORMAL_MERGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub(crate) struct Hull {
    pub affine_dim: usize,
    /// Extreme points, lexicographically sorted, copied from the input.
    pub vertices: Vec<Point>,
    /// Unit normals and offsets of the irredundant halfspaces, sorted.
    pub normals: Vec<Point>,
    pub offsets: Vec<f64>,
}

struct Facet {
    verts: Vec<usize>,
    normal: Point,
    offset: f64,
}

/// Computes extreme points and facet halfspaces of `conv(points)`.
///
/// `points` must be nonempty and share one dimension.
pub(crate) fn convex_hull(points: &[Point], eps: f64) -> Hull {
    let dim = points[0].len();
    let refs: Vec<&Point> = points.iter().collect();
    let c = centroid(&refs);

    // Affine hull: pivoted Gram-Schmidt on the centred points.
    let mut span: Vec<Point> = Vec::new();
    let mut residuals: Vec<Point> = points.iter().map(|p| p - &c).collect();
    while span.len() < dim {
        let (best, norm) = residuals
            .iter()
            .enumerate()
            .map(|(i, r)| (i, r.norm()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if norm <= eps {
            break;
        }
        let dir = residuals[best].clone() / norm;
        extend_basis(&mut span, &dir, 1e-12);
        let last = span.last().unwrap().clone();
        for r in residuals.iter_mut() {
            let k = r.dot(&last);
            r.axpy(-k, &last, 1.0);
        }
    }
    let affine_dim = span.len();
    let basis = axis_aligned_basis(dim, &span);
    let normal_space = complement(dim, &basis);

    let mut normals: Vec<Point> = Vec::new();
    let candidates: Vec<usize>;
    match affine_dim {
        0 => {
            candidates = vec![0];
        }
        1 => {
            let u = &basis[0];
            let proj: Vec<f64> = points.iter().map(|p| u.dot(&(p - &c))).collect();
            let lo = argmin(&proj);
            let hi = argmax(&proj);
            candidates = vec![lo, hi];
            normals.push(u.clone());
            normals.push(-u.clone());
        }
        k => {
            let local: Vec<Point> = points
                .iter()
                .map(|p| {
                    let d = p - &c;
                    DVector::from_iterator(k, basis.iter().map(|b| b.dot(&d)))
                })
                .collect();
            let facets = incremental_hull(&local, eps);
            let mut used: Vec<usize> = facets.iter().flat_map(|f| f.verts.clone()).collect();
            used.sort_unstable();
            used.dedup();
            candidates = used;
            for f in facets.iter().filter(|f| is_true_facet(&local, f, eps)) {
                let mut n = DVector::zeros(dim);
                for (a, b) in f.normal.iter().zip(basis.iter()) {
                    n.axpy(*a, b, 1.0);
                }
                normals.push(n);
            }
        }
    }
    for w in &normal_space {
        normals.push(w.clone());
        normals.push(-w.clone());
    }

    // Canonical halfspaces: cleaned unit normals, merged when parallel, offset = support.
    let mut merged: Vec<Point> = Vec::new();
    for n in normals {
        let n = clean_normal(n);
        if !merged.iter().any(|m| (m - &n).amax() <= NORMAL_MERGE_TOL) {
            merged.push(n);
        }
    }
    merged.sort_by(lex_cmp);
    let offsets: Vec<f64> = merged
        .iter()
        .map(|n| points.iter().map(|p| n.dot(p)).fold(f64::NEG_INFINITY, f64::max))
        .collect();

    // Extreme points: tight normals must span the whole space.
    let mut vertices: Vec<Point> = Vec::new();
    for &i in &candidates {
        let p = &points[i];
        let tight: Vec<&Point> = merged
            .iter()
            .zip(&offsets)
            .filter(|(n, b)| n.dot(p) >= *b - eps)
            .map(|(n, _)| n)
            .collect();
        if rank(&tight) == dim && !vertices.iter().any(|v| (v - p).amax() <= eps) {
            vertices.push(p.clone());
        }
    }
    vertices.sort_by(lex_cmp);

    Hull { affine_dim, vertices, normals: merged, offsets }
}

fn argmin(xs: &[f64]) -> usize {
    (0..xs.len()).fold(0, |best, i| if xs[i] < xs[best] { i } else { best })
}

fn argmax(xs: &[f64]) -> usize {
    (0..xs.len()).fold(0, |best, i| if xs[i] > xs[best] { i } else { best })
}

/// Beneath-beyond hull of points that are full-dimensional in their own space (k ≥ 2).
fn incremental_hull(pts: &[Point], eps: f64) -> Vec<Facet> {
    let k = pts[0].len();
    let simplex = initial_simplex(pts, eps);
    let simplex_refs: Vec<&Point> = simplex.iter().map(|&i| &pts[i]).collect();
    let interior = centroid(&simplex_refs);

    let mut facets: Vec<Facet> = Vec::new();
    for skip in 0..simplex.len() {
        let verts: Vec<usize> = simplex
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != skip)
            .map(|(_, &v)| v)
            .collect();
        if let Some(f) = make_facet(pts, verts, &interior) {
            facets.push(f);
        }
    }

    let mut remaining: Vec<usize> = (0..pts.len()).filter(|i| !simplex.contains(i)).collect();
    loop {
        let mut best: Option<(usize, f64)> = None;
        remaining.retain(|&i| {
            let d = facets
                .iter()
                .map(|f| f.normal.dot(&pts[i]) - f.offset)
                .fold(f64::NEG_INFINITY, f64::max);
            if d > eps {
                if best.is_none_or(|(_, bd)| d > bd) {
                    best = Some((i, d));
                }
                true
            } else {
                false
            }
        });
        let Some((p, _)) = best else { break };
        remaining.retain(|&i| i != p);

        let (visible, kept): (Vec<Facet>, Vec<Facet>) = facets
            .into_iter()
            .partition(|f| f.normal.dot(&pts[p]) - f.offset > eps);
        facets = kept;

        let mut ridges: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for f in &visible {
            for skip in 0..k {
                let ridge: Vec<usize> = f
                    .verts
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != skip)
                    .map(|(_, &v)| v)
                    .collect();
                *ridges.entry(ridge).or_insert(0) += 1;
            }
        }
        for (ridge, count) in ridges {
            if count != 1 {
                continue;
            }
            let mut verts = ridge;
            verts.push(p);
            if let Some(f) = make_facet(pts, verts, &interior) {
                facets.push(f);
            }
        }
    }
    facets
}

/// A supporting plane is a facet when the points on it span a hyperplane.
fn is_true_facet(pts: &[Point], f: &Facet, eps: f64) -> bool {
    let k = pts[0].len();
    let on: Vec<&Point> = pts.iter().filter(|p| f.normal.dot(p) >= f.offset - eps).collect();
    let diffs: Vec<Point> = on.iter().map(|p| *p - on[0]).collect();
    let refs: Vec<&Point> = diffs.iter().collect();
    rank(&refs) == k - 1
}

fn make_facet(pts: &[Point], mut verts: Vec<usize>, interior: &Point) -> Option<Facet> {
    verts.sort_unstable();
    let refs: Vec<&Point> = verts.iter().map(|&i| &pts[i]).collect();
    let mut normal = hyperplane_normal(&refs)?;
    let mut offset = normal.dot(refs[0]);
    if normal.dot(interior) > offset {
        normal = -normal;
        offset = -offset;
    }
    Some(Facet { verts, normal, offset })
}

/// Indices of `k + 1` affinely independent points spread as far as possible.
fn initial_simplex(pts: &[Point], eps: f64) -> Vec<usize> {
    let k = pts[0].len();
    let refs: Vec<&Point> = pts.iter().collect();
    let c = centroid(&refs);
    let first = (0..pts.len())
        .max_by(|&a, &b| (&pts[a] - &c).norm().total_cmp(&(&pts[b] - &c).norm()).then(b.cmp(&a)))
        .unwrap();
    let mut chosen = vec![first];
    let mut basis: Vec<Point> = Vec::new();
    while chosen.len() < k + 1 {
        let origin = &pts[first];
        let (idx, norm) = (0..pts.len())
            .map(|i| (i, orthogonalize(&(&pts[i] - origin), &basis).norm()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        debug_assert!(norm > eps, "point set is not full-dimensional");
        extend_basis(&mut basis, &(&pts[idx] - origin), 0.0);
        chosen.push(idx);
    }
    chosen
}
