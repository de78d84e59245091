//! Convex polygons in the plane, signed distances and collision margins.
//!
//! Separation between disjoint polygons is the exact vertex/edge distance.
//! Penetration is the minimum translation over the face normals of both
//! polygons, which is exact for convex shapes in 2-D.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Point2 = [f64; 2];

const MIN_VERTEX_SPACING: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid geometry: {0}")]
    Invalid(String),
}

#[inline]
fn sub(a: Point2, b: Point2) -> Point2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
fn dot(a: Point2, b: Point2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
fn cross(a: Point2, b: Point2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
fn norm(a: Point2) -> f64 {
    a[0].hypot(a[1])
}

/// Counter-clockwise, strictly convex polygon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point2>", into = "Vec<Point2>")]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
}

impl TryFrom<Vec<Point2>> for ConvexPolygon {
    type Error = GeometryError;
    fn try_from(v: Vec<Point2>) -> Result<Self, Self::Error> {
        ConvexPolygon::new(v)
    }
}

impl From<ConvexPolygon> for Vec<Point2> {
    fn from(p: ConvexPolygon) -> Self {
        p.vertices
    }
}

impl ConvexPolygon {
    pub fn new(vertices: Vec<Point2>) -> Result<Self, GeometryError> {
        let n = vertices.len();
        if n < 3 {
            return Err(GeometryError::Invalid(format!(
                "polygon needs at least 3 vertices, got {n}"
            )));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(GeometryError::Invalid("non-finite vertex".into()));
        }
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            if norm(sub(b, a)) <= MIN_VERTEX_SPACING {
                return Err(GeometryError::Invalid(format!(
                    "duplicate consecutive vertices at index {i}"
                )));
            }
            if cross(sub(b, a), sub(c, b)) <= 0.0 {
                return Err(GeometryError::Invalid(format!(
                    "polygon is not strictly convex and counter-clockwise at vertex {}",
                    (i + 1) % n
                )));
            }
        }
        Ok(Self { vertices })
    }

    /// Axis-aligned rectangle `[xmin, xmax] × [ymin, ymax]`.
    pub fn rectangle(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Result<Self, GeometryError> {
        Self::new(vec![[xmin, ymin], [xmax, ymin], [xmax, ymax], [xmin, ymax]])
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn translated(&self, d: Point2) -> Self {
        Self {
            vertices: self
                .vertices
                .iter()
                .map(|v| [v[0] + d[0], v[1] + d[1]])
                .collect(),
        }
    }

    fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Outward unit normal for the edge starting at vertex `i`.
    fn outward_normal(a: Point2, b: Point2) -> Point2 {
        let e = sub(b, a);
        let l = norm(e);
        [e[1] / l, -e[0] / l]
    }
}

/// First-order contact description of a pair of polygons.
///
/// `normal` is the unit direction along which the first polygon must move to
/// increase the signed distance, and `point` lies on the contact normal line.
/// For any rigid motion of the first polygon with velocity field `V`, the
/// rate of change of `distance` is `normal · V(point)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact {
    pub distance: f64,
    pub normal: Point2,
    pub point: Point2,
}

fn closest_on_segment(p: Point2, a: Point2, b: Point2) -> Point2 {
    let ab = sub(b, a);
    let t = (dot(sub(p, a), ab) / dot(ab, ab)).clamp(0.0, 1.0);
    [a[0] + t * ab[0], a[1] + t * ab[1]]
}

/// Largest separation along the face normals of `faces`, measured against `other`.
/// Returns (separation, face normal, deepest vertex of `other`).
fn max_face_separation(faces: &ConvexPolygon, other: &ConvexPolygon) -> (f64, Point2, Point2) {
    let mut best = (f64::NEG_INFINITY, [0.0, 0.0], [0.0, 0.0]);
    for (a, b) in faces.edges() {
        let n = ConvexPolygon::outward_normal(a, b);
        let (sep, deepest) = other
            .vertices
            .iter()
            .map(|q| (dot(n, sub(*q, a)), *q))
            .fold((f64::INFINITY, [0.0, 0.0]), |acc, x| if x.0 < acc.0 { x } else { acc });
        if sep > best.0 {
            best = (sep, n, deepest);
        }
    }
    best
}

/// Signed distance with witness data, see [`Contact`].
pub fn contact(a: &ConvexPolygon, b: &ConvexPolygon) -> Contact {
    let (sep_a, n_a, deep_b) = max_face_separation(a, b);
    let (sep_b, n_b, deep_a) = max_face_separation(b, a);

    if sep_a.max(sep_b) > 0.0 {
        // Disjoint: closest pair involves a vertex of one polygon and an edge of the other.
        let mut best = (f64::INFINITY, [0.0, 0.0], [0.0, 0.0]);
        for v in &a.vertices {
            for (p, q) in b.edges() {
                let c = closest_on_segment(*v, p, q);
                let d = norm(sub(*v, c));
                if d < best.0 {
                    best = (d, *v, c);
                }
            }
        }
        for v in &b.vertices {
            for (p, q) in a.edges() {
                let c = closest_on_segment(*v, p, q);
                let d = norm(sub(c, *v));
                if d < best.0 {
                    best = (d, c, *v);
                }
            }
        }
        let (d, pa, pb) = best;
        let diff = sub(pa, pb);
        return Contact {
            distance: d,
            normal: [diff[0] / d, diff[1] / d],
            point: pa,
        };
    }

    if sep_b >= sep_a {
        // Minimum translation along a face normal of `b`: move `a` outward along it.
        Contact {
            distance: sep_b,
            normal: n_b,
            point: deep_a,
        }
    } else {
        // Minimum translation along a face normal of `a`: move `a` against it.
        Contact {
            distance: sep_a,
            normal: [-n_a[0], -n_a[1]],
            point: deep_b,
        }
    }
}

/// Positive separation distance, or negative penetration depth.
pub fn signed_distance(a: &ConvexPolygon, b: &ConvexPolygon) -> f64 {
    contact(a, b).distance
}

/// Obstacles plus safety margin ε.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionSpec {
    pub obstacles: Vec<ConvexPolygon>,
    pub safety_margin: f64,
}

impl CollisionSpec {
    pub fn new(obstacles: Vec<ConvexPolygon>, safety_margin: f64) -> Result<Self, GeometryError> {
        if !(safety_margin >= 0.0) {
            return Err(GeometryError::Invalid(format!(
                "safety margin must be nonnegative, got {safety_margin}"
            )));
        }
        Ok(Self {
            obstacles,
            safety_margin,
        })
    }

    pub fn empty() -> Self {
        Self {
            obstacles: Vec::new(),
            safety_margin: 0.0,
        }
    }
}

/// Margins `ε − sd(body_i, obstacle_k)`, row-major over (body, obstacle).
/// Every entry `≤ 0` means collision-free with margin.
pub fn collision_values(bodies: &[ConvexPolygon], spec: &CollisionSpec) -> Vec<f64> {
    let mut out = Vec::with_capacity(bodies.len() * spec.obstacles.len());
    for body in bodies {
        for obs in &spec.obstacles {
            out.push(spec.safety_margin - signed_distance(body, obs));
        }
    }
    out
}

/// Rectangle of half-width `radius` around the segment `p0 → p1`.
pub fn link_polygon(p0: Point2, p1: Point2, radius: f64) -> Result<ConvexPolygon, GeometryError> {
    let d = sub(p1, p0);
    let len = norm(d);
    if !(len > 1e-9) {
        return Err(GeometryError::Invalid(format!(
            "link segment too short ({len} m)"
        )));
    }
    if !(radius > 0.0) {
        return Err(GeometryError::Invalid(format!(
            "link radius must be positive, got {radius}"
        )));
    }
    let n = [-d[1] / len * radius, d[0] / len * radius];
    ConvexPolygon::new(vec![
        [p0[0] - n[0], p0[1] - n[1]],
        [p1[0] - n[0], p1[1] - n[1]],
        [p1[0] + n[0], p1[1] + n[1]],
        [p0[0] + n[0], p0[1] + n[1]],
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(x: f64, y: f64, s: f64) -> ConvexPolygon {
        ConvexPolygon::rectangle(x, y, x + s, y + s).unwrap()
    }

    #[test]
    fn separated_squares() {
        let a = square(0.0, 0.0, 1.0);
        let b = square(3.0, 0.0, 1.0);
        assert!((signed_distance(&a, &b) - 2.0).abs() < 1e-15);
        let c = contact(&a, &b);
        assert_eq!(c.normal, [-1.0, 0.0]);
    }

    #[test]
    fn full_overlap_is_side_length() {
        let a = square(0.0, 0.0, 1.0);
        assert!((signed_distance(&a, &a) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn partial_overlap() {
        let a = square(0.0, 0.0, 2.0);
        let b = square(1.0, 1.0, 2.0);
        assert!((signed_distance(&a, &b) + 1.0).abs() < 1e-15);
        assert!((signed_distance(&b, &a) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn corner_separation_is_euclidean() {
        let a = square(0.0, 0.0, 1.0);
        let b = square(4.0, 5.0, 1.0);
        assert!((signed_distance(&a, &b) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_degenerate_polygons() {
        assert!(ConvexPolygon::new(vec![[0.0, 0.0], [1.0, 0.0]]).is_err());
        // clockwise
        assert!(ConvexPolygon::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]).is_err());
        // collinear
        assert!(ConvexPolygon::new(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [1.0, 1.0]]).is_err());
        assert!(ConvexPolygon::new(vec![[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).is_err());
    }

    #[test]
    fn collision_value_substitution() {
        let spec = CollisionSpec::new(vec![square(2.0, 0.0, 1.0)], 0.01).unwrap();
        let far = collision_values(&[square(0.0, 0.0, 1.0)], &spec);
        assert!((far[0] + 0.99).abs() < 1e-12);
        let deep = collision_values(&[square(1.5, 0.0, 1.0)], &spec);
        assert!((deep[0] - 0.51).abs() < 1e-12);
        assert!(collision_values(&[square(0.0, 0.0, 1.0)], &CollisionSpec::empty()).is_empty());
    }

    #[test]
    fn link_rectangles() {
        let r = link_polygon([0.0, 0.0], [1.0, 0.0], 0.05).unwrap();
        assert_eq!(
            r.vertices(),
            &[[0.0, -0.05], [1.0, -0.05], [1.0, 0.05], [0.0, 0.05]]
        );
        let v = link_polygon([0.0, 0.0], [0.0, 2.0], 0.1).unwrap();
        let xs: Vec<f64> = v.vertices().iter().map(|p| p[0]).collect();
        let ys: Vec<f64> = v.vertices().iter().map(|p| p[1]).collect();
        let w = xs.iter().cloned().fold(f64::MIN, f64::max) - xs.iter().cloned().fold(f64::MAX, f64::min);
        let h = ys.iter().cloned().fold(f64::MIN, f64::max) - ys.iter().cloned().fold(f64::MAX, f64::min);
        assert!((w - 0.2).abs() < 1e-12 && (h - 2.0).abs() < 1e-12);

        // 45°: edges parallel / perpendicular to (1,1)/√2
        let d = link_polygon([0.0, 0.0], [1.0, 1.0], 0.05).unwrap();
        let vs = d.vertices();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let e0 = sub(vs[1], vs[0]);
        let e1 = sub(vs[2], vs[1]);
        assert!((cross(e0, [s, s])).abs() < 1e-12);
        assert!((dot(e1, [s, s])).abs() < 1e-12);
        assert!((norm(e1) - 0.1).abs() < 1e-12);
        assert!(link_polygon([1.0, 1.0], [1.0, 1.0], 0.1).is_err());
    }
}
