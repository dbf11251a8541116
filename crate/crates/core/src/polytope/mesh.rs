//! Triangle-mesh export of 3-D polytopes (OFF plus a JSON record with axis metadata).

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::Serialize;

use super::linalg::complement;
use super::{Point, Polytope, PolytopeError, Result};
use crate::format::{fmt_num, round_sig};
use crate::tolerance::geom_eps;

/// Axis labels and units of flexibility volumes.
pub const FLEX_AXIS_LABELS: [&str; 3] = ["rho", "pi", "epsilon"];
pub const FLEX_AXIS_UNITS: [&str; 3] = ["MW/min", "MW", "MWh"];

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<[f64; 3]>,
    /// Outward-oriented (counter-clockwise seen from outside) triangles.
    pub facets: Vec<[usize; 3]>,
}

/// Structured record of a mesh, serialized as JSON next to the OFF file.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct MeshRecord {
    pub vertices: Vec<[f64; 3]>,
    pub facets: Vec<[usize; 3]>,
    pub axis_labels: [String; 3],
    pub units: [String; 3],
}

/// Triangulates every 2-D face of a 3-D polytope. Flat polygons get both sides;
/// segments and points produce no triangles.
pub fn triangulate(p: &Polytope) -> Result<TriangleMesh> {
    if p.dim() != 3 {
        return Err(PolytopeError::DimensionMismatch(p.dim(), 3));
    }
    let eps = geom_eps();
    let verts = p.vertices();
    let mut facets = Vec::new();
    let h = p.hrep();
    for (n, b) in h.normals().iter().zip(h.offsets()) {
        let on: Vec<usize> = (0..verts.len()).filter(|&i| n.dot(&verts[i]) >= b - eps).collect();
        if on.len() < 3 {
            continue;
        }
        let basis = complement(3, std::slice::from_ref(n));
        let (u, mut v) = (basis[0].clone(), basis[1].clone());
        if u.cross(&v).dot(n) < 0.0 {
            v = -v;
        }
        let mut c = Point::zeros(3);
        for &i in &on {
            c += &verts[i];
        }
        c /= on.len() as f64;
        let mut ring: Vec<(usize, f64, f64)> = on
            .iter()
            .map(|&i| {
                let d = &verts[i] - &c;
                (i, u.dot(&d), v.dot(&d))
            })
            .collect();
        ring.sort_by(|a, b| angular_cmp((a.1, a.2), (b.1, b.2)).then(a.0.cmp(&b.0)));
        for w in 1..ring.len() - 1 {
            facets.push([ring[0].0, ring[w].0, ring[w + 1].0]);
        }
    }
    Ok(TriangleMesh {
        vertices: verts.iter().map(|v| [v[0], v[1], v[2]]).collect(),
        facets,
    })
}

/// Counter-clockwise order around the origin starting at the positive first axis.
fn angular_cmp(a: (f64, f64), b: (f64, f64)) -> Ordering {
    let half = |p: (f64, f64)| if p.1 > 0.0 || (p.1 == 0.0 && p.0 > 0.0) { 0 } else { 1 };
    half(a).cmp(&half(b)).then_with(|| {
        let cross = a.0 * b.1 - a.1 * b.0;
        0.0_f64.total_cmp(&cross)
    })
}

impl TriangleMesh {
    /// Geomview OFF text with 9-significant-digit coordinates.
    pub fn to_off(&self) -> String {
        let mut s = String::new();
        writeln!(s, "OFF").unwrap();
        writeln!(s, "{} {} 0", self.vertices.len(), self.facets.len()).unwrap();
        for v in &self.vertices {
            writeln!(s, "{} {} {}", fmt_num(v[0]), fmt_num(v[1]), fmt_num(v[2])).unwrap();
        }
        for f in &self.facets {
            writeln!(s, "3 {} {} {}", f[0], f[1], f[2]).unwrap();
        }
        s
    }

    pub fn record(&self, labels: [&str; 3], units: [&str; 3]) -> MeshRecord {
        MeshRecord {
            vertices: self
                .vertices
                .iter()
                .map(|v| [round_sig(v[0]), round_sig(v[1]), round_sig(v[2])])
                .collect(),
            facets: self.facets.clone(),
            axis_labels: labels.map(String::from),
            units: units.map(String::from),
        }
    }

    /// Record with the `(ρ, π, ε)` flexibility axes.
    pub fn flex_record(&self) -> MeshRecord {
        self.record(FLEX_AXIS_LABELS, FLEX_AXIS_UNITS)
    }
}
