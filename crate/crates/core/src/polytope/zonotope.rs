use itertools::Itertools;

use super::{check_dims, check_point, Point, Polytope, PolytopeError, Result, MAX_DIM};

/// Largest generator count accepted for vertex conversion (2^g sign patterns).
const MAX_GENERATORS: usize = 20;

/// `{center + Σ αᵢ gᵢ : αᵢ ∈ [−1, 1]}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Zonotope {
    center: Point,
    generators: Vec<Point>,
}

impl Zonotope {
    pub fn new(center: Point, generators: Vec<Point>) -> Result<Self> {
        let dim = center.len();
        if dim == 0 {
            return Err(PolytopeError::EmptyInput);
        }
        if dim > MAX_DIM {
            return Err(PolytopeError::DimensionTooHigh(dim));
        }
        check_point(&center, dim)?;
        for g in &generators {
            check_point(g, dim)?;
        }
        Ok(Self { center, generators })
    }

    /// Axis-aligned box `[lo, hi]` as a zonotope with one generator per non-flat axis.
    pub fn from_box(lo: &[f64], hi: &[f64]) -> Result<Self> {
        check_dims(lo.len(), hi.len())?;
        if lo.iter().zip(hi).any(|(l, h)| l > h) {
            return Err(PolytopeError::Infeasible);
        }
        let dim = lo.len();
        let center = Point::from_iterator(dim, lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)));
        let generators = (0..dim)
            .filter(|&i| hi[i] > lo[i])
            .map(|i| {
                let mut g = Point::zeros(dim);
                g[i] = 0.5 * (hi[i] - lo[i]);
                g
            })
            .collect();
        Self::new(center, generators)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn generators(&self) -> &[Point] {
        &self.generators
    }

    pub fn support(&self, d: &Point) -> f64 {
        self.center.dot(d) + self.generators.iter().map(|g| g.dot(d).abs()).sum::<f64>()
    }

    /// Minkowski sum: centers add, generator lists concatenate.
    pub fn minkowski_sum(&self, other: &Zonotope) -> Result<Zonotope> {
        check_dims(self.dim(), other.dim())?;
        let mut generators = self.generators.clone();
        generators.extend(other.generators.iter().cloned());
        Ok(Self { center: &self.center + &other.center, generators })
    }

    /// Hull of all sign patterns; only extreme points are kept.
    pub fn to_polytope(&self) -> Result<Polytope> {
        let gens: Vec<&Point> = self.generators.iter().filter(|g| g.amax() > 0.0).collect();
        if gens.len() > MAX_GENERATORS {
            return Err(PolytopeError::Malformed(format!(
                "{} generators exceed the vertex-conversion limit of {MAX_GENERATORS}",
                gens.len()
            )));
        }
        let points = if gens.is_empty() {
            vec![self.center.clone()]
        } else {
            gens.iter()
                .map(|_| [-1.0, 1.0])
                .multi_cartesian_product()
                .map(|signs| {
                    let mut p = self.center.clone();
                    for (s, g) in signs.iter().zip(&gens) {
                        p.axpy(*s, g, 1.0);
                    }
                    p
                })
                .collect()
        };
        Polytope::from_points(points)
    }
}
