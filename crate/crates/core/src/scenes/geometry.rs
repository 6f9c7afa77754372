//! Planar primitives for the occlusion demo: simple polygons, rigid
//! placements, and segment-versus-polygon visibility clipping.

use nalgebra::{Point2, Vector2};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Point = Point2<f64>;

/// Touch tolerance for clipping: sub-segments shorter than this are
/// discarded and points this close to a boundary count as covered.
pub const GEOM_EPS: f64 = 1e-9;

fn cross(a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

/// A simple polygon in counterclockwise orientation. Convexity is not
/// required (occlusion hypotheses may use notched shapes); use
/// [`Polygon::is_convex`] where it matters.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidInput(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        let n = vertices.len();
        for i in 0..n {
            let j = (i + 1) % n;
            if (vertices[j] - vertices[i]).norm() < GEOM_EPS {
                return Err(Error::InvalidInput(format!(
                    "degenerate polygon: vertices {i} and {j} coincide"
                )));
            }
        }
        let poly = Polygon { vertices };
        let area = poly.signed_area();
        if area.abs() < GEOM_EPS {
            return Err(Error::InvalidInput("degenerate polygon: zero area".into()));
        }
        if area < 0.0 {
            return Err(Error::InvalidInput(
                "polygon must be counterclockwise".into(),
            ));
        }
        if !poly.is_simple() {
            return Err(Error::InvalidInput("polygon is self-intersecting".into()));
        }
        Ok(poly)
    }

    pub fn from_coords(coords: &[[f64; 2]]) -> Result<Self> {
        Self::new(coords.iter().map(|c| Point::new(c[0], c[1])).collect())
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> Vec<Segment> {
        let n = self.vertices.len();
        (0..n)
            .map(|i| Segment {
                a: self.vertices[i],
                b: self.vertices[(i + 1) % n],
            })
            .collect()
    }

    fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        let mut acc = 0.0;
        for i in 0..n {
            let p = self.vertices[i];
            let q = self.vertices[(i + 1) % n];
            acc += p.x * q.y - q.x * p.y;
        }
        acc * 0.5
    }

    /// Area centroid (the rotation center used by placements).
    pub fn centroid(&self) -> Point {
        let n = self.vertices.len();
        let mut cx = 0.0;
        let mut cy = 0.0;
        let mut area = 0.0;
        for i in 0..n {
            let p = self.vertices[i];
            let q = self.vertices[(i + 1) % n];
            let w = p.x * q.y - q.x * p.y;
            area += w;
            cx += (p.x + q.x) * w;
            cy += (p.y + q.y) * w;
        }
        area *= 0.5;
        Point::new(cx / (6.0 * area), cy / (6.0 * area))
    }

    /// Strict convexity: every consecutive turn is strictly left.
    pub fn is_convex(&self) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let c = self.vertices[(i + 2) % n];
            cross(b - a, c - b) > GEOM_EPS
        })
    }

    fn is_simple(&self) -> bool {
        let edges = self.edges();
        let n = edges.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                match segment_intersections(&edges[i], &edges[j]) {
                    Crossings::None => {}
                    _ => return false,
                }
            }
        }
        true
    }

    /// True when `pt` lies strictly inside or within [`GEOM_EPS`] of the
    /// boundary (the closed-region convention used by occlusion clipping).
    pub fn covers(&self, pt: Point) -> bool {
        for edge in self.edges() {
            if edge.distance_to_point(pt) <= GEOM_EPS {
                return true;
            }
        }
        // Even-odd ray cast; boundary grazing was handled above.
        let n = self.vertices.len();
        let mut inside = false;
        for i in 0..n {
            let p = self.vertices[i];
            let q = self.vertices[(i + 1) % n];
            if (p.y > pt.y) != (q.y > pt.y) {
                let x_int = p.x + (pt.y - p.y) * (q.x - p.x) / (q.y - p.y);
                if pt.x < x_int {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

impl Serialize for Polygon {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let coords: Vec<[f64; 2]> = self.vertices.iter().map(|p| [p.x, p.y]).collect();
        coords.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Polygon {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let coords = Vec::<[f64; 2]>::deserialize(deserializer)?;
        Polygon::from_coords(&coords).map_err(D::Error::custom)
    }
}

/// Rigid placement: the polygon is rotated by `orientation` about its
/// centroid, which then lands at `position`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub position: [f64; 2],
    pub orientation: f64,
}

impl Placement {
    pub fn new(position: [f64; 2], orientation: f64) -> Self {
        Placement {
            position,
            orientation,
        }
    }

    /// Same placement rotated further about the object center.
    pub fn rotated(&self, by: f64) -> Self {
        Placement {
            position: self.position,
            orientation: self.orientation + by,
        }
    }

    pub fn apply(&self, polygon: &Polygon) -> Polygon {
        let centroid = polygon.centroid();
        let (sin, cos) = self.orientation.sin_cos();
        let pos = Vector2::new(self.position[0], self.position[1]);
        let vertices = polygon
            .vertices()
            .iter()
            .map(|v| {
                let d = v - centroid;
                Point::new(
                    pos.x + cos * d.x - sin * d.y,
                    pos.y + sin * d.x + cos * d.y,
                )
            })
            .collect();
        // Rigid motions preserve simplicity and orientation.
        Polygon { vertices }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub fn new(a: Point, b: Point) -> Self {
        Segment { a, b }
    }

    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }

    pub fn point_at(&self, t: f64) -> Point {
        self.a + (self.b - self.a) * t
    }

    pub fn distance_to_point(&self, pt: Point) -> f64 {
        let d = self.b - self.a;
        let len2 = d.norm_squared();
        if len2 == 0.0 {
            return (pt - self.a).norm();
        }
        let t = ((pt - self.a).dot(&d) / len2).clamp(0.0, 1.0);
        (pt - self.point_at(t)).norm()
    }
}

/// Intersections of two segments, parameterized on the first.
enum Crossings {
    None,
    /// Transversal crossing or endpoint touch.
    At(f64),
    /// Collinear overlap between the two parameters.
    Overlap(f64, f64),
}

fn segment_intersections(s: &Segment, other: &Segment) -> Crossings {
    let d1 = s.b - s.a;
    let d2 = other.b - other.a;
    let denom = cross(d1, d2);
    let offset = other.a - s.a;
    let scale = d1.norm().max(d2.norm()).max(1.0);
    if denom.abs() > 1e-12 * scale * scale {
        let t = cross(offset, d2) / denom;
        let u = cross(offset, d1) / denom;
        let eps_t = GEOM_EPS / d1.norm().max(GEOM_EPS);
        let eps_u = GEOM_EPS / d2.norm().max(GEOM_EPS);
        if t >= -eps_t && t <= 1.0 + eps_t && u >= -eps_u && u <= 1.0 + eps_u {
            return Crossings::At(t.clamp(0.0, 1.0));
        }
        return Crossings::None;
    }
    // Parallel: collinear iff the offset has no normal component.
    if cross(offset, d1).abs() > GEOM_EPS * scale {
        return Crossings::None;
    }
    let len2 = d1.norm_squared();
    if len2 == 0.0 {
        return Crossings::None;
    }
    let t0 = offset.dot(&d1) / len2;
    let t1 = (other.b - s.a).dot(&d1) / len2;
    let (lo, hi) = (t0.min(t1), t0.max(t1));
    let (lo, hi) = (lo.max(0.0), hi.min(1.0));
    if lo >= hi {
        return Crossings::None;
    }
    Crossings::Overlap(lo, hi)
}

/// Parts of `segment` not covered by the closed polygon. Sub-segments
/// shorter than [`GEOM_EPS`] are discarded.
pub fn clip_segment_outside(segment: &Segment, polygon: &Polygon) -> Vec<Segment> {
    let len = segment.length();
    if len < GEOM_EPS {
        return Vec::new();
    }
    let mut cuts = vec![0.0, 1.0];
    for edge in polygon.edges() {
        match segment_intersections(segment, &edge) {
            Crossings::None => {}
            Crossings::At(t) => cuts.push(t),
            Crossings::Overlap(t0, t1) => {
                cuts.push(t0);
                cuts.push(t1);
            }
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() * len < GEOM_EPS);

    let mut visible = Vec::new();
    let mut open: Option<(f64, f64)> = None;
    for window in cuts.windows(2) {
        let (t0, t1) = (window[0], window[1]);
        if (t1 - t0) * len < GEOM_EPS {
            continue;
        }
        let mid = segment.point_at(0.5 * (t0 + t1));
        if !polygon.covers(mid) {
            open = match open {
                Some((s0, s1)) if (t0 - s1).abs() * len < GEOM_EPS => Some((s0, t1)),
                Some(range) => {
                    visible.push(range);
                    Some((t0, t1))
                }
                None => Some((t0, t1)),
            };
        } else if let Some(range) = open.take() {
            visible.push(range);
        }
    }
    if let Some(range) = open {
        visible.push(range);
    }
    visible
        .into_iter()
        .filter(|(t0, t1)| (t1 - t0) * len >= GEOM_EPS)
        .map(|(t0, t1)| Segment::new(segment.point_at(t0), segment.point_at(t1)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Polygon {
        Polygon::from_coords(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap()
    }

    #[test]
    fn polygon_validation() {
        assert!(Polygon::from_coords(&[[0.0, 0.0], [1.0, 0.0]]).is_err());
        // Clockwise is rejected.
        assert!(Polygon::from_coords(&[[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]).is_err());
        // Bowtie is rejected.
        assert!(
            Polygon::from_coords(&[[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]).is_err()
        );
        assert!(unit_square().is_convex());
        // Notched hexagon: simple but not convex.
        let notched = Polygon::from_coords(&[
            [0.0, 0.0],
            [4.0, 0.0],
            [3.0, 1.0],
            [4.0, 2.0],
            [4.0, 4.0],
            [0.0, 4.0],
        ])
        .unwrap();
        assert!(!notched.is_convex());
    }

    #[test]
    fn centroid_of_square() {
        let c = unit_square().centroid();
        assert!((c - Point::new(0.5, 0.5)).norm() < 1e-12);
    }

    #[test]
    fn placement_rotates_about_centroid() {
        let square = unit_square();
        let placed = Placement::new([3.0, 2.0], std::f64::consts::FRAC_PI_2).apply(&square);
        assert!((placed.centroid() - Point::new(3.0, 2.0)).norm() < 1e-12);
        // Vertices sit at distance sqrt(0.5) from the centroid, rotated 90
        // degrees: (0,0) -> centroid + R90 * (-0.5, -0.5) = (3.5, 1.5).
        assert!((placed.vertices()[0] - Point::new(3.5, 1.5)).norm() < 1e-12);
    }

    #[test]
    fn covers_uses_closed_region() {
        let sq = unit_square();
        assert!(sq.covers(Point::new(0.5, 0.5)));
        assert!(sq.covers(Point::new(0.0, 0.5))); // boundary
        assert!(sq.covers(Point::new(1.0, 1.0))); // vertex
        assert!(!sq.covers(Point::new(1.2, 0.5)));
    }

    #[test]
    fn clip_disjoint_segment_is_whole() {
        let sq = unit_square();
        let seg = Segment::new(Point::new(2.0, 0.0), Point::new(3.0, 1.0));
        let parts = clip_segment_outside(&seg, &sq);
        assert_eq!(parts.len(), 1);
        assert!((parts[0].length() - seg.length()).abs() < 1e-12);
    }

    #[test]
    fn clip_contained_segment_vanishes() {
        let sq = unit_square();
        let seg = Segment::new(Point::new(0.2, 0.2), Point::new(0.8, 0.8));
        assert!(clip_segment_outside(&seg, &sq).is_empty());
    }

    #[test]
    fn clip_crossing_segment_keeps_two_tails() {
        let sq = unit_square();
        let seg = Segment::new(Point::new(-1.0, 0.5), Point::new(2.0, 0.5));
        let parts = clip_segment_outside(&seg, &sq);
        assert_eq!(parts.len(), 2);
        let total: f64 = parts.iter().map(Segment::length).sum();
        assert!((total - 2.0).abs() < 1e-9);
    }

    #[test]
    fn clip_segment_on_boundary_counts_as_covered() {
        let sq = unit_square();
        let seg = Segment::new(Point::new(0.5, 0.0), Point::new(1.5, 0.0));
        let parts = clip_segment_outside(&seg, &sq);
        assert_eq!(parts.len(), 1);
        assert!((parts[0].a - Point::new(1.0, 0.0)).norm() < 1e-9);
        assert!((parts[0].b - Point::new(1.5, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn clip_against_notched_polygon_sees_the_notch() {
        // The notch exposes the middle of a segment passing behind it.
        let notched = Polygon::from_coords(&[
            [0.0, 0.0],
            [4.0, 0.0],
            [3.0, 2.0],
            [4.0, 4.0],
            [4.0, 5.0],
            [0.0, 5.0],
        ])
        .unwrap();
        let seg = Segment::new(Point::new(3.4, -1.0), Point::new(3.4, 6.0));
        let parts = clip_segment_outside(&seg, &notched);
        // Below, inside the notch, and above.
        assert_eq!(parts.len(), 3);
    }
}
