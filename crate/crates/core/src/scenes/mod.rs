//! The occlusion demo: two placed polygonal objects, support-line counting
//! on the visible segments, and rotation-randomized occlusion-order
//! inference.
//!
//! A hypothesis supplies both objects and their placements. Its back object
//! is rotated about its own center; the observed support-line count is
//! typical for the true stacking order and jumps for a tuned alternative,
//! which is the contrast the verdict is built on.

mod geometry;

pub use geometry::{clip_segment_outside, Placement, Point, Polygon, Segment, GEOM_EPS};

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_ANGLE_TOL: f64 = 1e-6;
pub const DEFAULT_OFFSET_TOL: f64 = 1e-6;

/// A built scene: both placed polygons plus the visible segments (front
/// edges whole, back edges clipped against the front polygon).
#[derive(Debug, Clone)]
pub struct Scene {
    back: Polygon,
    front: Polygon,
    visible_edges: Vec<Segment>,
}

impl Scene {
    pub fn back(&self) -> &Polygon {
        &self.back
    }

    pub fn front(&self) -> &Polygon {
        &self.front
    }

    pub fn visible_edges(&self) -> &[Segment] {
        &self.visible_edges
    }

    /// Visible back sub-segments only (the clipped part of the drawing).
    pub fn visible_back_edges(&self) -> Vec<Segment> {
        self.back
            .edges()
            .iter()
            .flat_map(|edge| clip_segment_outside(edge, &self.front))
            .collect()
    }
}

/// Place both objects and clip the back edges against the front polygon.
pub fn build_scene(
    back: &Polygon,
    back_placement: &Placement,
    front: &Polygon,
    front_placement: &Placement,
) -> Result<Scene> {
    let back_placed = back_placement.apply(back);
    let front_placed = front_placement.apply(front);
    let mut visible = front_placed.edges();
    for edge in back_placed.edges() {
        visible.extend(clip_segment_outside(&edge, &front_placed));
    }
    Ok(Scene {
        back: back_placed,
        front: front_placed,
        visible_edges: visible,
    })
}

/// Support line of a segment after scene normalization: direction angle
/// mod pi and signed origin offset.
#[derive(Debug, Clone, Copy)]
struct SupportLine {
    angle: f64,
    offset: f64,
}

fn support_line(seg: &Segment) -> SupportLine {
    let d = seg.b - seg.a;
    let mut angle = d.y.atan2(d.x);
    let mut flip = 1.0;
    if angle < 0.0 {
        angle += std::f64::consts::PI;
        flip = -1.0;
    } else if angle >= std::f64::consts::PI {
        angle -= std::f64::consts::PI;
        flip = -1.0;
    }
    // Normal for the canonicalized direction (cos a, sin a) is
    // (-sin a, cos a); flipping the direction flips the normal.
    let (sin, cos) = angle.sin_cos();
    let normal = nalgebra::Vector2::new(-sin, cos) * flip * flip; // direction-canonical
    let _ = flip;
    let offset = normal.x * seg.a.x + normal.y * seg.a.y;
    SupportLine { angle, offset }
}

fn same_line(a: &SupportLine, b: &SupportLine, angle_tol: f64, offset_tol: f64) -> bool {
    let diff = (a.angle - b.angle).abs();
    if diff <= angle_tol {
        (a.offset - b.offset).abs() <= offset_tol
    } else if diff >= std::f64::consts::PI - angle_tol {
        // Wrapped around pi: the canonical normal flipped sign.
        (a.offset + b.offset).abs() <= offset_tol
    } else {
        false
    }
}

/// Normalization of a segment set to unit diameter, centered on the
/// bounding box, so the absolute line tolerances are scale free.
fn normalize_segments(segments: &[Segment]) -> Vec<Segment> {
    let mut min = Point::new(f64::INFINITY, f64::INFINITY);
    let mut max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for seg in segments {
        for p in [seg.a, seg.b] {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
    }
    let mut diameter: f64 = 0.0;
    let points: Vec<Point> = segments.iter().flat_map(|s| [s.a, s.b]).collect();
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            diameter = diameter.max((p - q).norm());
        }
    }
    if diameter <= 0.0 {
        return segments.to_vec();
    }
    let center = Point::new(0.5 * (min.x + max.x), 0.5 * (min.y + max.y));
    segments
        .iter()
        .map(|s| {
            Segment::new(
                Point::new((s.a.x - center.x) / diameter, (s.a.y - center.y) / diameter),
                Point::new((s.b.x - center.x) / diameter, (s.b.y - center.y) / diameter),
            )
        })
        .collect()
}

/// Group (already normalized) segments into support-line classes.
fn line_classes(
    segments: &[Segment],
    angle_tol: f64,
    offset_tol: f64,
) -> Vec<(SupportLine, Vec<usize>)> {
    let mut classes: Vec<(SupportLine, Vec<usize>)> = Vec::new();
    for (idx, seg) in segments.iter().enumerate() {
        if seg.length() < GEOM_EPS {
            continue;
        }
        let line = support_line(seg);
        match classes
            .iter_mut()
            .find(|(repr, _)| same_line(repr, &line, angle_tol, offset_tol))
        {
            Some((_, members)) => members.push(idx),
            None => classes.push((line, vec![idx])),
        }
    }
    classes
}

/// Number of distinct lines carrying the visible segments. Collinear
/// segments merge regardless of which object produced them; parallel but
/// offset edges stay distinct.
pub fn count_support_lines(scene: &Scene, angle_tol: f64, offset_tol: f64) -> usize {
    let normalized = normalize_segments(scene.visible_edges());
    line_classes(&normalized, angle_tol, offset_tol).len()
}

/// One stacking-order hypothesis: both objects with their placements, back
/// first.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneHypothesis {
    pub back: Polygon,
    pub back_placement: Placement,
    pub front: Polygon,
    pub front_placement: Placement,
}

impl SceneHypothesis {
    pub fn build(&self) -> Result<Scene> {
        build_scene(
            &self.back,
            &self.back_placement,
            &self.front,
            &self.front_placement,
        )
    }

    fn build_rotated(&self, angle: f64) -> Result<Scene> {
        build_scene(
            &self.back,
            &self.back_placement.rotated(angle),
            &self.front,
            &self.front_placement,
        )
    }
}

/// Interval union length bookkeeping for stroke-coverage comparison.
fn merged_intervals(mut intervals: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    intervals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in intervals {
        match merged.last_mut() {
            Some(last) if lo <= last.1 + 1e-9 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    merged
}

fn intersection_length(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let mut total = 0.0;
    for &(a0, a1) in a {
        for &(b0, b1) in b {
            total += (a1.min(b1) - a0.max(b0)).max(0.0);
        }
    }
    total
}

/// Check that two scenes draw the same strokes: identical support-line sets
/// with matching per-line coverage, within the line tolerances and a
/// coverage tolerance on the normalized (unit-diameter) scale.
fn scenes_draw_identically(
    a: &Scene,
    b: &Scene,
    angle_tol: f64,
    offset_tol: f64,
    coverage_tol: f64,
) -> bool {
    let mut combined: Vec<Segment> = a.visible_edges().to_vec();
    let split = combined.len();
    combined.extend_from_slice(b.visible_edges());
    let normalized = normalize_segments(&combined);
    for (line, members) in line_classes(&normalized, angle_tol, offset_tol) {
        let (sin, cos) = line.angle.sin_cos();
        let project = |seg: &Segment| {
            let ta = seg.a.x * cos + seg.a.y * sin;
            let tb = seg.b.x * cos + seg.b.y * sin;
            (ta.min(tb), ta.max(tb))
        };
        let cover_a = merged_intervals(
            members
                .iter()
                .filter(|&&i| i < split)
                .map(|&i| project(&normalized[i]))
                .collect(),
        );
        let cover_b = merged_intervals(
            members
                .iter()
                .filter(|&&i| i >= split)
                .map(|&i| project(&normalized[i]))
                .collect(),
        );
        let len = |c: &[(f64, f64)]| c.iter().map(|(lo, hi)| hi - lo).sum::<f64>();
        let symmetric_difference =
            len(&cover_a) + len(&cover_b) - 2.0 * intersection_length(&cover_a, &cover_b);
        if symmetric_difference > coverage_tol {
            return false;
        }
    }
    true
}

/// Rotation-randomized assessment of one hypothesis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisAssessment {
    /// Fraction of random back-object rotations preserving the observed
    /// count.
    pub typicality: f64,
    /// Histogram of rotated support-line counts.
    pub count_histogram: BTreeMap<usize, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OcclusionChoice {
    FirstHypothesis,
    SecondHypothesis,
    Undecided,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OcclusionVerdict {
    pub observed_count: usize,
    pub first: HypothesisAssessment,
    pub second: HypothesisAssessment,
    pub choice: OcclusionChoice,
}

fn assess<R: Rng + ?Sized>(
    hypothesis: &SceneHypothesis,
    observed: usize,
    n_rotations: usize,
    angle_tol: f64,
    offset_tol: f64,
    rng: &mut R,
) -> Result<HypothesisAssessment> {
    let mut histogram = BTreeMap::new();
    let mut matches = 0usize;
    for _ in 0..n_rotations {
        let phi = rng.gen_range(0.0..std::f64::consts::TAU);
        let scene = hypothesis.build_rotated(phi)?;
        let count = count_support_lines(&scene, angle_tol, offset_tol);
        *histogram.entry(count).or_insert(0) += 1;
        if count == observed {
            matches += 1;
        }
    }
    Ok(HypothesisAssessment {
        typicality: matches as f64 / n_rotations as f64,
        count_histogram: histogram,
    })
}

/// Compare two stacking-order hypotheses that reproduce the same observed
/// drawing. Each hypothesis is scored by the fraction of random rotations
/// of its back object that keep the support-line count at the observed
/// value; the more typical hypothesis wins.
pub fn infer_occlusion_order<R: Rng + ?Sized>(
    first: &SceneHypothesis,
    second: &SceneHypothesis,
    n_rotations: usize,
    rng: &mut R,
) -> Result<OcclusionVerdict> {
    if n_rotations < 50 {
        return Err(Error::InvalidParameter(format!(
            "need at least 50 rotations, got {n_rotations}"
        )));
    }
    let scene_a = first.build()?;
    let scene_b = second.build()?;
    let (angle_tol, offset_tol) = (DEFAULT_ANGLE_TOL, DEFAULT_OFFSET_TOL);
    if !scenes_draw_identically(&scene_a, &scene_b, angle_tol, offset_tol, 1e-6) {
        return Err(Error::InconsistentHypothesis(
            "the two hypotheses do not reproduce the same visible geometry".into(),
        ));
    }
    let observed_a = count_support_lines(&scene_a, angle_tol, offset_tol);
    let observed_b = count_support_lines(&scene_b, angle_tol, offset_tol);
    if observed_a != observed_b {
        return Err(Error::InconsistentHypothesis(format!(
            "hypotheses disagree on the observed count: {observed_a} vs {observed_b}"
        )));
    }
    let first_assessment = assess(first, observed_a, n_rotations, angle_tol, offset_tol, rng)?;
    let second_assessment = assess(second, observed_a, n_rotations, angle_tol, offset_tol, rng)?;
    let choice = if first_assessment.typicality > second_assessment.typicality {
        OcclusionChoice::FirstHypothesis
    } else if second_assessment.typicality > first_assessment.typicality {
        OcclusionChoice::SecondHypothesis
    } else {
        OcclusionChoice::Undecided
    };
    Ok(OcclusionVerdict {
        observed_count: observed_a,
        first: first_assessment,
        second: second_assessment,
        choice,
    })
}

/// The square-behind-triangle demo pair. The first hypothesis is the true
/// stacking (triangle in front of the square); the second explains the same
/// drawing with a notched hexagon in front of the triangle, whose two notch
/// edges are tuned to the triangle's edge lines.
pub fn occlusion_demo_hypotheses() -> (SceneHypothesis, SceneHypothesis) {
    let square =
        Polygon::from_coords(&[[0.0, 0.0], [4.0, 0.0], [4.0, 4.0], [0.0, 4.0]]).unwrap();
    let triangle =
        Polygon::from_coords(&[[3.5, 0.55], [0.9, -6.6], [9.5, 4.75]]).unwrap();
    // Square with the corner quad P-B-Q-T1 notched out, P on the bottom
    // edge, Q on the right edge, T1 = the triangle vertex inside.
    let notched = Polygon::from_coords(&[
        [0.0, 0.0],
        [3.3, 0.0],
        [3.5, 0.55],
        [4.0, 0.9],
        [4.0, 4.0],
        [0.0, 4.0],
    ])
    .unwrap();

    let at_centroid = |poly: &Polygon| {
        let c = poly.centroid();
        Placement::new([c.x, c.y], 0.0)
    };

    let true_order = SceneHypothesis {
        back_placement: at_centroid(&square),
        back: square,
        front_placement: at_centroid(&triangle),
        front: triangle.clone(),
    };
    let alternative = SceneHypothesis {
        back_placement: at_centroid(&triangle),
        back: triangle,
        front_placement: at_centroid(&notched),
        front: notched,
    };
    (true_order, alternative)
}
