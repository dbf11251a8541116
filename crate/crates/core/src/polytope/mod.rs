//! Convex polytopes in low dimension (typically 2 or 3, at most 6).
//!
//! Three representations are provided:
//!
//! - [`HPolytope`]: an intersection of halfspaces `n·x ≤ b` with unit normals.
//!   It may be unbounded or empty; both are checked on demand.
//! - [`VPolytope`]: the irredundant vertex list of a nonempty polytope.
//! - [`Polytope`]: a bounded, nonempty polytope carrying both representations,
//!   kept consistent at construction. This is what flexibility volumes use.
//!
//! [`Zonotope`] is a compact form for sums of segments.
//!
//! Lower-dimensional polytopes (points, segments, flat polygons) are ordinary
//! values: their H-representation pins the affine hull with pairs of opposing
//! halfspaces. All predicates use the absolute tolerance [`crate::geom_eps`];
//! callers are expected to scale quantities to order one.

mod hull;
mod linalg;
pub mod mesh;
mod vertex_enum;
mod zonotope;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::tolerance::geom_eps;
use hull::convex_hull;
use linalg::{centroid, complement, extend_basis, lex_cmp, RANK_TOL};

pub use zonotope::Zonotope;

/// A point or direction.
pub type Point = DVector<f64>;

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolytopeError {
    #[error("empty input")]
    EmptyInput,
    #[error("dimension {0} exceeds the supported maximum of {MAX_DIM}")]
    DimensionTooHigh(usize),
    #[error("dimension mismatch ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("polytope is unbounded")]
    Unbounded,
    #[error("halfspace intersection is empty")]
    Infeasible,
    #[error("support function is unbounded in the requested direction")]
    UnboundedInDirection,
    #[error("malformed input: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, PolytopeError>;

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(PolytopeError::DimensionMismatch(a, b))
    }
}

fn check_point(p: &Point, dim: usize) -> Result<()> {
    check_dims(dim, p.len())?;
    if p.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(PolytopeError::Malformed("non-finite coordinate".into()))
    }
}

/// `{x : normals[i]·x ≤ offsets[i]}` with unit normals.
#[derive(Debug, Clone, PartialEq)]
pub struct HPolytope {
    dim: usize,
    normals: Vec<Point>,
    offsets: Vec<f64>,
}

impl HPolytope {
    /// Builds the halfspace set, rescaling every row to a unit normal.
    pub fn new(dim: usize, normals: Vec<Point>, offsets: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(PolytopeError::EmptyInput);
        }
        if dim > MAX_DIM {
            return Err(PolytopeError::DimensionTooHigh(dim));
        }
        if normals.len() != offsets.len() {
            return Err(PolytopeError::Malformed(format!(
                "{} normals but {} offsets",
                normals.len(),
                offsets.len()
            )));
        }
        let mut ns = Vec::with_capacity(normals.len());
        let mut bs = Vec::with_capacity(offsets.len());
        for (n, b) in normals.into_iter().zip(offsets) {
            check_point(&n, dim)?;
            if !b.is_finite() {
                return Err(PolytopeError::Malformed("non-finite offset".into()));
            }
            let norm = n.norm();
            if norm == 0.0 {
                return Err(PolytopeError::Malformed("zero normal".into()));
            }
            ns.push(n / norm);
            bs.push(b / norm);
        }
        Ok(Self { dim, normals: ns, offsets: bs })
    }

    /// The axis-aligned box `lo ≤ x ≤ hi`; empty when some `lo > hi`.
    pub fn from_box(lo: &[f64], hi: &[f64]) -> Result<Self> {
        check_dims(lo.len(), hi.len())?;
        let dim = lo.len();
        let mut normals = Vec::with_capacity(2 * dim);
        let mut offsets = Vec::with_capacity(2 * dim);
        for i in 0..dim {
            normals.push(linalg::unit(dim, i));
            offsets.push(hi[i]);
            normals.push(-linalg::unit(dim, i));
            offsets.push(-lo[i]);
        }
        Self::new(dim, normals, offsets)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn normals(&self) -> &[Point] {
        &self.normals
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn num_halfspaces(&self) -> usize {
        self.normals.len()
    }

    pub fn contains_point(&self, p: &Point) -> bool {
        let eps = geom_eps();
        self.normals.iter().zip(&self.offsets).all(|(n, b)| n.dot(p) <= b + eps)
    }

    /// Whether the recession cone is trivial, i.e. the normals positively span the space.
    pub fn is_bounded(&self) -> bool {
        if self.normals.len() <= self.dim {
            return false;
        }
        let hull = convex_hull(&self.normals, geom_eps());
        hull.affine_dim == self.dim && hull.offsets.iter().all(|&b| b > 1e-9)
    }

    /// Support value `max n·x` over the set, which must be nonempty.
    pub fn support(&self, d: &Point) -> Result<f64> {
        check_point(d, self.dim)?;
        vertex_enum::dual_support(&self.normals, &self.offsets, d)
            .ok_or(PolytopeError::UnboundedInDirection)
    }

    pub fn translate(&self, t: &Point) -> Result<Self> {
        check_point(t, self.dim)?;
        let offsets = self.normals.iter().zip(&self.offsets).map(|(n, b)| b + n.dot(t)).collect();
        Ok(Self { dim: self.dim, normals: self.normals.clone(), offsets })
    }

    /// Intersection, as the concatenation of both halfspace lists.
    pub fn intersect(&self, other: &HPolytope) -> Result<Self> {
        check_dims(self.dim, other.dim)?;
        let mut normals = self.normals.clone();
        normals.extend(other.normals.iter().cloned());
        let mut offsets = self.offsets.clone();
        offsets.extend(other.offsets.iter().copied());
        Ok(Self { dim: self.dim, normals, offsets })
    }

    /// Whether the (bounded) set is empty.
    pub fn is_empty(&self) -> Result<bool> {
        match hrep_to_vrep(self) {
            Ok(_) => Ok(false),
            Err(PolytopeError::Infeasible) => Ok(true),
            Err(e) => Err(e),
        }
    }

    /// Irredundant form of a bounded, nonempty set: unit normals, no redundant rows.
    pub fn canonicalize(&self) -> Result<Self> {
        Ok(Polytope::from_hrep(self)?.h)
    }

    pub fn volume(&self) -> Result<f64> {
        Ok(Polytope::from_hrep(self)?.volume())
    }
}

/// Irredundant vertex list of a nonempty polytope.
#[derive(Debug, Clone, PartialEq)]
pub struct VPolytope {
    dim: usize,
    vertices: Vec<Point>,
}

impl VPolytope {
    /// Keeps only the extreme points of `points`, sorted lexicographically.
    pub fn new(points: Vec<Point>) -> Result<Self> {
        Ok(Polytope::from_points(points)?.to_vpolytope())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn support(&self, d: &Point) -> Result<f64> {
        check_point(d, self.dim)?;
        Ok(max_dot(&self.vertices, d))
    }
}

fn max_dot(points: &[Point], d: &Point) -> f64 {
    points.iter().map(|v| v.dot(d)).fold(f64::NEG_INFINITY, f64::max)
}

/// Bounded, nonempty convex polytope with consistent V- and H-representations.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    dim: usize,
    affine_dim: usize,
    vertices: Vec<Point>,
    h: HPolytope,
}

impl Polytope {
    /// Convex hull of a nonempty point set.
    pub fn from_points(points: Vec<Point>) -> Result<Self> {
        let first = points.first().ok_or(PolytopeError::EmptyInput)?;
        let dim = first.len();
        if dim == 0 {
            return Err(PolytopeError::EmptyInput);
        }
        if dim > MAX_DIM {
            return Err(PolytopeError::DimensionTooHigh(dim));
        }
        for p in &points {
            check_point(p, dim)?;
        }
        let hull = convex_hull(&points, geom_eps());
        Ok(Self {
            dim,
            affine_dim: hull.affine_dim,
            vertices: hull.vertices,
            h: HPolytope { dim, normals: hull.normals, offsets: hull.offsets },
        })
    }

    pub fn from_vpolytope(v: &VPolytope) -> Self {
        Self::from_points(v.vertices.clone()).expect("VPolytope is nonempty and well-formed")
    }

    /// Vertex enumeration of a bounded halfspace set.
    pub fn from_hrep(h: &HPolytope) -> Result<Self> {
        if !h.is_bounded() {
            return Err(PolytopeError::Unbounded);
        }
        let pts = vertex_enum::enumerate_vertices(&h.normals, &h.offsets, geom_eps());
        if pts.is_empty() {
            return Err(PolytopeError::Infeasible);
        }
        Self::from_points(pts)
    }

    /// Axis-aligned box; `lo[i] == hi[i]` gives a flat (degenerate) box.
    pub fn from_box(lo: &[f64], hi: &[f64]) -> Result<Self> {
        check_dims(lo.len(), hi.len())?;
        if lo.is_empty() {
            return Err(PolytopeError::EmptyInput);
        }
        if lo.iter().zip(hi).any(|(l, h)| l > h) {
            return Err(PolytopeError::Infeasible);
        }
        let dim = lo.len();
        let corners = (0..dim)
            .map(|i| if lo[i] == hi[i] { vec![lo[i]] } else { vec![lo[i], hi[i]] })
            .multi_cartesian_product()
            .map(DVector::from_vec)
            .collect();
        Self::from_points(corners)
    }

    /// The single point `p`.
    pub fn point(p: Point) -> Result<Self> {
        Self::from_points(vec![p])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dimension of the affine hull (0 for a point).
    pub fn affine_dim(&self) -> usize {
        self.affine_dim
    }

    pub fn is_full_dim(&self) -> bool {
        self.affine_dim == self.dim
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn hrep(&self) -> &HPolytope {
        &self.h
    }

    pub fn to_vpolytope(&self) -> VPolytope {
        VPolytope { dim: self.dim, vertices: self.vertices.clone() }
    }

    pub fn support(&self, d: &Point) -> f64 {
        max_dot(&self.vertices, d)
    }

    pub fn contains_point(&self, p: &Point) -> bool {
        self.h.contains_point(p)
    }

    /// `other ⊆ self`, checked on the vertices of `other`.
    pub fn contains(&self, other: &Polytope) -> bool {
        other.vertices.iter().all(|v| self.contains_point(v))
    }

    /// Componentwise bounds of the vertex set.
    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = self.vertices[0].clone();
        let mut hi = self.vertices[0].clone();
        for v in &self.vertices[1..] {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    pub fn translate(&self, t: &Point) -> Result<Self> {
        check_point(t, self.dim)?;
        Self::from_points(self.vertices.iter().map(|v| v + t).collect())
    }

    /// Image under `x ↦ m·x` for a square matrix `m`.
    pub fn map_linear(&self, m: &DMatrix<f64>) -> Result<Self> {
        check_dims(m.ncols(), self.dim)?;
        check_dims(m.nrows(), self.dim)?;
        Self::from_points(self.vertices.iter().map(|v| m * v).collect())
    }

    /// Lebesgue volume; zero for lower-dimensional polytopes.
    pub fn volume(&self) -> f64 {
        if !self.is_full_dim() {
            return 0.0;
        }
        full_dim_volume(&self.vertices, &self.h.normals, &self.h.offsets)
    }

    /// Euclidean distance from `p` to the nearest point of the polytope.
    pub fn distance_to(&self, p: &Point) -> f64 {
        if self.contains_point(p) {
            return 0.0;
        }
        let eps = geom_eps();
        let h = &self.h;
        let mut best = self
            .vertices
            .iter()
            .map(|v| (v - p).norm())
            .fold(f64::INFINITY, f64::min);
        // The nearest point lies in the relative interior of a face, which is
        // the affine flat cut out by some independent subset of tight rows.
        for size in 1..self.dim {
            for subset in (0..h.num_halfspaces()).combinations(size) {
                let mut basis = Vec::with_capacity(size);
                if !subset.iter().all(|&i| extend_basis(&mut basis, &h.normals[i], RANK_TOL)) {
                    continue;
                }
                let n = DMatrix::from_fn(size, self.dim, |r, c| h.normals[subset[r]][c]);
                let resid = DVector::from_iterator(
                    size,
                    subset.iter().map(|&i| h.normals[i].dot(p) - h.offsets[i]),
                );
                let Some(chol) = (&n * n.transpose()).cholesky() else { continue };
                let x = p - n.transpose() * chol.solve(&resid);
                if h.normals.iter().zip(&h.offsets).all(|(nn, b)| nn.dot(&x) <= b + 10.0 * eps) {
                    best = best.min((&x - p).norm());
                }
            }
        }
        best
    }

    /// Hausdorff distance between two polytopes of equal dimension.
    pub fn hausdorff(&self, other: &Polytope) -> f64 {
        let a = self.vertices.iter().map(|v| other.distance_to(v)).fold(0.0, f64::max);
        let b = other.vertices.iter().map(|v| self.distance_to(v)).fold(0.0, f64::max);
        a.max(b)
    }

    /// Two-sided containment at the geometric tolerance.
    pub fn set_eq(&self, other: &Polytope) -> bool {
        self.dim == other.dim && self.contains(other) && other.contains(self)
    }
}

/// Sum over facets of `height · facet area / d`, measured from the vertex centroid.
fn full_dim_volume(vertices: &[Point], normals: &[Point], offsets: &[f64]) -> f64 {
    let dim = vertices[0].len();
    if dim == 1 {
        let (lo, hi) = vertices.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
            (l.min(v[0]), h.max(v[0]))
        });
        return hi - lo;
    }
    let eps = geom_eps();
    let refs: Vec<&Point> = vertices.iter().collect();
    let c = centroid(&refs);
    let mut total = 0.0;
    for (n, b) in normals.iter().zip(offsets) {
        let height = b - n.dot(&c);
        if height <= 0.0 {
            continue;
        }
        let on_facet: Vec<&Point> = vertices.iter().filter(|v| n.dot(v) >= b - eps).collect();
        if on_facet.len() < dim {
            continue;
        }
        let basis = complement(dim, std::slice::from_ref(n));
        let origin = on_facet[0];
        let local: Vec<Point> = on_facet
            .iter()
            .map(|v| {
                let d = *v - origin;
                DVector::from_iterator(dim - 1, basis.iter().map(|u| u.dot(&d)))
            })
            .collect();
        let hull = convex_hull(&local, eps);
        if hull.affine_dim < dim - 1 {
            continue;
        }
        let area = full_dim_volume(&hull.vertices, &hull.normals, &hull.offsets);
        total += height * area / dim as f64;
    }
    total
}

/// H-representation of the convex hull of a vertex set.
pub fn vrep_to_hrep(p: &VPolytope) -> Result<HPolytope> {
    Ok(Polytope::from_vpolytope(p).h)
}

/// Extreme points of a bounded halfspace set.
pub fn hrep_to_vrep(p: &HPolytope) -> Result<VPolytope> {
    Ok(Polytope::from_hrep(p)?.to_vpolytope())
}

/// `{a + b : a ∈ p, b ∈ q}` as the hull of all pairwise vertex sums.
pub fn minkowski_sum(p: &Polytope, q: &Polytope) -> Result<Polytope> {
    check_dims(p.dim, q.dim)?;
    let sums = p
        .vertices
        .iter()
        .cartesian_product(q.vertices.iter())
        .map(|(a, b)| a + b)
        .collect();
    Polytope::from_points(sums)
}

/// `{x : x ⊕ q ⊆ p}`: every halfspace of `p` is pulled in by the support of `q`.
///
/// The result may be empty; use [`HPolytope::is_empty`] or [`Polytope::from_hrep`]
/// to find out.
pub fn pontryagin_diff(p: &HPolytope, q: &Polytope) -> Result<HPolytope> {
    check_dims(p.dim, q.dim)?;
    let offsets = p
        .normals
        .iter()
        .zip(&p.offsets)
        .map(|(n, b)| b - q.support(n))
        .collect();
    Ok(HPolytope { dim: p.dim, normals: p.normals.clone(), offsets })
}

/// `q ⊆ p`.
pub fn contains(p: &Polytope, q: &Polytope) -> Result<bool> {
    check_dims(p.dim, q.dim)?;
    Ok(p.contains(q))
}

pub fn volume(p: &Polytope) -> f64 {
    p.volume()
}

/// `max_{x ∈ p} d·x`.
pub fn support(p: &Polytope, d: &Point) -> Result<f64> {
    check_point(d, p.dim)?;
    Ok(p.support(d))
}

/// Sorts points lexicographically; the canonical vertex order used for export.
pub fn sort_points(points: &mut [Point]) {
    points.sort_by(lex_cmp);
}
