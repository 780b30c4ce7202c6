//! Images of the open set under single maps, and exact set relations
//! between them (axis-aligned boxes in any dimension, convex polygons in
//! the plane).

use crate::error::{Error, Result};
use crate::ifs::map::SimilarityMap;
use crate::ifs::model::{IFSModel, OpenSet};

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Shape {
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// Counter-clockwise vertices of a convex polygon.
    Polygon(Vec<[f64; 2]>),
}

fn is_signed_permutation(orth: &[f64], d: usize) -> bool {
    (0..d).all(|i| {
        let row = &orth[i * d..(i + 1) * d];
        let big = row.iter().filter(|v| (v.abs() - 1.0).abs() < 1e-12).count();
        let small = row.iter().filter(|v| v.abs() < 1e-12).count();
        big == 1 && small == d - 1
    })
}

fn ccw(mut v: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    let n = v.len();
    let area: f64 = (0..n)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum();
    if area < 0.0 {
        v.reverse();
    }
    v
}

fn box_polygon(lo: &[f64], hi: &[f64]) -> Vec<[f64; 2]> {
    vec![
        [lo[0], lo[1]],
        [hi[0], lo[1]],
        [hi[0], hi[1]],
        [lo[0], hi[1]],
    ]
}

impl Shape {
    pub(crate) fn of_open_set(o: &OpenSet) -> Shape {
        match o {
            OpenSet::Box { lo, hi } => Shape::Box {
                lo: lo.clone(),
                hi: hi.clone(),
            },
            OpenSet::Polygon(v) => Shape::Polygon(v.clone()),
        }
    }

    /// `S(O)`.
    pub(crate) fn image(o: &OpenSet, map: &SimilarityMap) -> Result<Shape> {
        let d = map.dim();
        let apply2 = |p: [f64; 2]| -> Result<[f64; 2]> {
            let y = map.apply(&p)?;
            Ok([y[0], y[1]])
        };
        match o {
            OpenSet::Box { lo, hi } if is_signed_permutation(map.orthogonal(), d) => {
                let a = map.apply(lo)?;
                let b = map.apply(hi)?;
                Ok(Shape::Box {
                    lo: a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect(),
                    hi: a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect(),
                })
            }
            OpenSet::Box { lo, hi } if d == 2 => {
                let v = box_polygon(lo, hi)
                    .into_iter()
                    .map(apply2)
                    .collect::<Result<Vec<_>>>()?;
                Ok(Shape::Polygon(ccw(v)))
            }
            OpenSet::Box { .. } => Err(Error::Unsupported(format!(
                "rotated images of boxes in dimension {d}"
            ))),
            OpenSet::Polygon(v) => {
                let v = v.iter().map(|&p| apply2(p)).collect::<Result<Vec<_>>>()?;
                Ok(Shape::Polygon(ccw(v)))
            }
        }
    }

    fn polygon(&self) -> Vec<[f64; 2]> {
        match self {
            Shape::Polygon(v) => v.clone(),
            Shape::Box { lo, hi } => box_polygon(lo, hi),
        }
    }

    fn vertices(&self) -> Vec<Vec<f64>> {
        match self {
            Shape::Box { lo, hi } => OpenSet::Box {
                lo: lo.clone(),
                hi: hi.clone(),
            }
            .vertices(),
            Shape::Polygon(v) => v.iter().map(|p| p.to_vec()).collect(),
        }
    }

    /// Whether the closure of `inner` lies in the closure of `self`, up to `slack`.
    pub(crate) fn contains(&self, inner: &Shape, slack: f64) -> bool {
        match (self, inner) {
            (Shape::Box { lo, hi }, Shape::Box { lo: a, hi: b }) => {
                (0..lo.len()).all(|i| a[i] >= lo[i] - slack && b[i] <= hi[i] + slack)
            }
            (Shape::Box { lo, hi }, _) => OpenSet::Box {
                lo: lo.clone(),
                hi: hi.clone(),
            }
            .vertices_contain(&inner.vertices(), slack),
            (Shape::Polygon(v), _) => {
                OpenSet::Polygon(v.clone()).vertices_contain(&inner.vertices(), slack)
            }
        }
    }

    /// Largest separation of the two closures along a candidate axis;
    /// negative means they overlap by that much along every tested axis.
    fn separation(&self, other: &Shape) -> f64 {
        match (self, other) {
            (Shape::Box { lo, hi }, Shape::Box { lo: a, hi: b }) => (0..lo.len())
                .map(|i| (a[i] - hi[i]).max(lo[i] - b[i]))
                .fold(f64::NEG_INFINITY, f64::max),
            _ => {
                let (p, q) = (self.polygon(), other.polygon());
                let mut best = f64::NEG_INFINITY;
                for poly in [&p, &q] {
                    let n = poly.len();
                    for i in 0..n {
                        let (a, b) = (poly[i], poly[(i + 1) % n]);
                        let (nx, ny) = (b[1] - a[1], a[0] - b[0]);
                        let len = (nx * nx + ny * ny).sqrt();
                        let proj = |v: &[[f64; 2]]| {
                            v.iter().fold((f64::MAX, f64::MIN), |(lo, hi), p| {
                                let s = (p[0] * nx + p[1] * ny) / len;
                                (lo.min(s), hi.max(s))
                            })
                        };
                        let (p0, p1) = proj(&p);
                        let (q0, q1) = proj(&q);
                        best = best.max((q0 - p1).max(p0 - q1));
                    }
                }
                best
            }
        }
    }

    /// Whether the open sets intersect in more than a `tol`-thin sliver.
    pub(crate) fn interiors_overlap(&self, other: &Shape, tol: f64) -> bool {
        self.separation(other) < -tol
    }

    /// Euclidean distance between the closures.
    pub(crate) fn distance(&self, other: &Shape) -> f64 {
        match (self, other) {
            (Shape::Box { lo, hi }, Shape::Box { lo: a, hi: b }) => (0..lo.len())
                .map(|i| (a[i] - hi[i]).max(lo[i] - b[i]).max(0.0).powi(2))
                .sum::<f64>()
                .sqrt(),
            _ => {
                if self.separation(other) <= 0.0 {
                    return 0.0;
                }
                let (p, q) = (self.polygon(), other.polygon());
                let mut best = f64::INFINITY;
                for (u, v) in [(&p, &q), (&q, &p)] {
                    let n = v.len();
                    for x in u.iter() {
                        for i in 0..n {
                            best = best.min(point_segment(*x, v[i], v[(i + 1) % n]));
                        }
                    }
                }
                best
            }
        }
    }
}

fn point_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let s = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    };
    let (x, y) = (a[0] + s * dx - p[0], a[1] + s * dy - p[1]);
    (x * x + y * y).sqrt()
}

impl OpenSet {
    fn vertices_contain(&self, pts: &[Vec<f64>], slack: f64) -> bool {
        pts.iter().all(|p| self.contains_closed(p, slack))
    }
}

/// `S_j(O)` for `j = 1..=m`.
pub(crate) fn images(model: &IFSModel, m: usize) -> Result<Vec<Shape>> {
    (1..=m)
        .map(|j| Shape::image(model.open_set(), &*model.map(j)?))
        .collect()
}
