//! Convex polygons on the ground plane and separating-axis queries.

use crate::error::{domain, Result};

pub type Point = [f64; 2];

/// Convex polygon stored counter-clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
}

impl ConvexPolygon {
    /// Accepts vertices in either winding; rejects degenerate or non-convex input.
    pub fn new(mut vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(domain("polygon needs at least 3 vertices"));
        }
        if vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(domain("polygon vertices must be finite"));
        }
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        let area = signed_area(&vertices);
        if area <= 1e-12 {
            return Err(domain("polygon footprint has zero area"));
        }
        let n = vertices.len();
        for i in 0..n {
            let (a, b, c) = (vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
            if cross(sub(b, a), sub(c, b)) < -1e-12 {
                return Err(domain("polygon is not convex"));
            }
        }
        Ok(Self { vertices })
    }

    /// Rectangle of `length` along `heading` and `width` across it.
    pub fn rectangle(center: Point, heading: f64, length: f64, width: f64) -> Self {
        let (c, s) = (heading.cos(), heading.sin());
        let (hl, hw) = (length / 2.0, width / 2.0);
        let corners = [(hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)];
        let vertices = corners
            .iter()
            .map(|&(a, b)| [center[0] + c * a - s * b, center[1] + s * a + c * b])
            .collect();
        Self { vertices }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn centroid(&self) -> Point {
        let n = self.vertices.len() as f64;
        let (sx, sy) = self
            .vertices
            .iter()
            .fold((0.0, 0.0), |(x, y), v| (x + v[0], y + v[1]));
        [sx / n, sy / n]
    }

    /// Closed containment test.
    pub fn contains(&self, p: Point) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            cross(sub(b, a), sub(p, a)) >= -1e-12
        })
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }

    /// Applies rotation by `angle` about the origin followed by translation.
    pub fn transformed(&self, angle: f64, translation: Point) -> Self {
        let (c, s) = (angle.cos(), angle.sin());
        Self {
            vertices: self
                .vertices
                .iter()
                .map(|v| [c * v[0] - s * v[1] + translation[0], s * v[0] + c * v[1] + translation[1]])
                .collect(),
        }
    }

    fn edge_normals(&self) -> impl Iterator<Item = Point> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| {
            let e = sub(self.vertices[(i + 1) % n], self.vertices[i]);
            let len = e[0].hypot(e[1]);
            [e[1] / len, -e[0] / len]
        })
    }

    fn project(&self, axis: Point) -> (f64, f64) {
        self.vertices
            .iter()
            .map(|v| dot(*v, axis))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)))
    }

    /// Separating-axis test; touching boundaries count as intersecting.
    pub fn intersects(&self, other: &ConvexPolygon) -> bool {
        self.minimum_translation(other).is_some()
    }

    /// Smallest translation that moves `self` out of `other`, or `None` when
    /// the polygons are strictly separated. Touching polygons return a zero
    /// vector.
    pub fn minimum_translation(&self, other: &ConvexPolygon) -> Option<Point> {
        let mut best: Option<(f64, Point)> = None;
        for axis in self.edge_normals().chain(other.edge_normals()) {
            let (a0, a1) = self.project(axis);
            let (b0, b1) = other.project(axis);
            if a1 < b0 || b1 < a0 {
                return None;
            }
            // push self along +axis or -axis, whichever is shorter
            let push_pos = b1 - a0;
            let push_neg = a1 - b0;
            let (depth, dir) = if push_pos < push_neg {
                (push_pos, axis)
            } else {
                (push_neg, [-axis[0], -axis[1]])
            };
            if best.map_or(true, |(d, _)| depth < d) {
                best = Some((depth, dir));
            }
        }
        best.map(|(d, dir)| [dir[0] * d, dir[1] * d])
    }
}

fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}
