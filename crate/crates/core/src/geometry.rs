//! Shape construction and exact geometric oracles.
//!
//! Coordinates are pixel units. Polygon vertex lists are stored with positive
//! signed (shoelace) area, i.e. counterclockwise in a y-up frame.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::Coverage;
use crate::rng::Rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("unsupported shape: {0}")]
    Unsupported(&'static str),
    #[error("generation failed after {tries} tries: {reason}")]
    GenerationFailed { tries: usize, reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn polar(radius: f64, angle: f64) -> Self {
        Point::new(radius * angle.cos(), radius * angle.sin())
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Point::new(v[0], v[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    RegularPolygon,
    IrregularConvexPolygon,
    NonConvexPolygon,
    Circle,
    Polyline,
}

impl ShapeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ShapeKind::RegularPolygon => "regular_polygon",
            ShapeKind::IrregularConvexPolygon => "irregular_convex_polygon",
            ShapeKind::NonConvexPolygon => "non_convex_polygon",
            ShapeKind::Circle => "circle",
            ShapeKind::Polyline => "polyline",
        }
    }
}

/// A single scene primitive.
///
/// `radius` on polygons is the size parameter: the distance from the
/// generation center to the farthest vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    RegularPolygon { vertices: Vec<Point>, radius: f64 },
    IrregularConvexPolygon { vertices: Vec<Point>, radius: f64 },
    NonConvexPolygon { vertices: Vec<Point>, radius: f64 },
    Circle { center: Point, radius: f64 },
    Polyline { points: Vec<Point>, stroke_width: f64 },
}

impl Shape {
    pub fn kind(&self) -> ShapeKind {
        match self {
            Shape::RegularPolygon { .. } => ShapeKind::RegularPolygon,
            Shape::IrregularConvexPolygon { .. } => ShapeKind::IrregularConvexPolygon,
            Shape::NonConvexPolygon { .. } => ShapeKind::NonConvexPolygon,
            Shape::Circle { .. } => ShapeKind::Circle,
            Shape::Polyline { .. } => ShapeKind::Polyline,
        }
    }

    /// Circumradius for area shapes, total arc length for polylines.
    pub fn size_param(&self) -> f64 {
        match self {
            Shape::RegularPolygon { radius, .. }
            | Shape::IrregularConvexPolygon { radius, .. }
            | Shape::NonConvexPolygon { radius, .. }
            | Shape::Circle { radius, .. } => *radius,
            Shape::Polyline { points, .. } => polyline_length(points),
        }
    }

    pub fn polygon(&self) -> Option<&[Point]> {
        match self {
            Shape::RegularPolygon { vertices, .. }
            | Shape::IrregularConvexPolygon { vertices, .. }
            | Shape::NonConvexPolygon { vertices, .. } => Some(vertices),
            _ => None,
        }
    }

    /// Axis-aligned bounds of the painted region, `(min, max)`.
    pub fn bounds(&self) -> (Point, Point) {
        match self {
            Shape::Circle { center, radius } => (
                Point::new(center.x - radius, center.y - radius),
                Point::new(center.x + radius, center.y + radius),
            ),
            Shape::Polyline {
                points,
                stroke_width,
            } => {
                let (lo, hi) = point_bounds(points);
                let h = stroke_width / 2.0;
                (Point::new(lo.x - h, lo.y - h), Point::new(hi.x + h, hi.y + h))
            }
            _ => point_bounds(self.polygon().unwrap()),
        }
    }

    /// Apply `f` to every defining point; radii and stroke widths are kept.
    pub fn map_points(&self, f: impl Fn(Point) -> Point) -> Shape {
        let m = |v: &Vec<Point>| v.iter().map(|&p| f(p)).collect::<Vec<_>>();
        match self {
            Shape::RegularPolygon { vertices, radius } => Shape::RegularPolygon {
                vertices: m(vertices),
                radius: *radius,
            },
            Shape::IrregularConvexPolygon { vertices, radius } => Shape::IrregularConvexPolygon {
                vertices: m(vertices),
                radius: *radius,
            },
            Shape::NonConvexPolygon { vertices, radius } => Shape::NonConvexPolygon {
                vertices: m(vertices),
                radius: *radius,
            },
            Shape::Circle { center, radius } => Shape::Circle {
                center: f(*center),
                radius: *radius,
            },
            Shape::Polyline {
                points,
                stroke_width,
            } => Shape::Polyline {
                points: m(points),
                stroke_width: *stroke_width,
            },
        }
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Shape {
        self.map_points(|p| Point::new(p.x + dx, p.y + dy))
    }

    /// Mirror across the vertical line `x = axis`. Polygon orientation is
    /// restored so the counterclockwise invariant holds.
    pub fn mirrored_x(&self, axis: f64) -> Shape {
        let mut s = self.map_points(|p| Point::new(2.0 * axis - p.x, p.y));
        match &mut s {
            Shape::RegularPolygon { vertices, .. }
            | Shape::IrregularConvexPolygon { vertices, .. }
            | Shape::NonConvexPolygon { vertices, .. } => vertices.reverse(),
            _ => {}
        }
        s
    }

    /// Uniform scaling about `origin`; size parameters scale along.
    pub fn scaled(&self, factor: f64, origin: Point) -> Shape {
        let f = |p: Point| origin + (p - origin) * factor;
        match self.map_points(f) {
            Shape::RegularPolygon { vertices, radius } => Shape::RegularPolygon {
                vertices,
                radius: radius * factor,
            },
            Shape::IrregularConvexPolygon { vertices, radius } => Shape::IrregularConvexPolygon {
                vertices,
                radius: radius * factor,
            },
            Shape::NonConvexPolygon { vertices, radius } => Shape::NonConvexPolygon {
                vertices,
                radius: radius * factor,
            },
            Shape::Circle { center, radius } => Shape::Circle {
                center,
                radius: radius * factor,
            },
            p @ Shape::Polyline { .. } => p,
        }
    }
}

fn point_bounds(points: &[Point]) -> (Point, Point) {
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    (lo, hi)
}

pub fn polyline_length(points: &[Point]) -> f64 {
    points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

/// What to build: kind, vertex count, size, orientation and placement.
///
/// `sides` is the polygon vertex count, or the waypoint count (2 or 3) for
/// polylines. `rotation` is the angle of the first vertex (polygons) or of
/// the first segment (polylines). For polylines `center` is the center of
/// the waypoint bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShapeSpec {
    pub kind: ShapeKind,
    pub sides: usize,
    pub size: f64,
    pub rotation: f64,
    pub center: Point,
}

/// Tunables for randomized shape construction. Angles in radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeParams {
    /// Vertex angle jitter as a fraction of the angular step.
    pub angle_jitter: f64,
    /// Vertex radius jitter as a fraction of the radius.
    pub radius_jitter: f64,
    pub reflex_min: f64,
    /// Smallest interior angle allowed on non-convex output.
    pub min_angle: f64,
    /// Distance from the reflex vertex to every non-incident edge, as a
    /// fraction of the size parameter.
    pub reflex_clearance: f64,
    /// Optional cap on every interior angle of convex output.
    pub convex_max_angle: Option<f64>,
    /// Interior angle at the middle waypoint of a broken polyline.
    pub turn_angle_range: (f64, f64),
    /// Fraction of the total length given to the first segment.
    pub arm_split_range: (f64, f64),
    pub stroke_width: f64,
    pub max_tries: usize,
}

impl Default for ShapeParams {
    fn default() -> Self {
        ShapeParams {
            angle_jitter: 0.25,
            radius_jitter: 0.30,
            reflex_min: 210f64.to_radians(),
            min_angle: 25f64.to_radians(),
            reflex_clearance: 0.35,
            convex_max_angle: None,
            turn_angle_range: (20f64.to_radians(), 160f64.to_radians()),
            arm_split_range: (0.3, 0.7),
            stroke_width: 3.0,
            max_tries: 1000,
        }
    }
}

fn regular_vertices(n: usize, r: f64, rotation: f64, center: Point) -> Vec<Point> {
    (0..n)
        .map(|k| center + Point::polar(r, rotation + 2.0 * PI * k as f64 / n as f64))
        .collect()
}

/// Build a random shape meeting `spec`.
pub fn gen_shape(spec: &ShapeSpec, params: &ShapeParams, rng: &mut Rng) -> Result<Shape, GeometryError> {
    if !(spec.size > 0.0) {
        return Err(GeometryError::InvalidShape(format!(
            "size must be positive, got {}",
            spec.size
        )));
    }
    match spec.kind {
        ShapeKind::RegularPolygon => {
            check_sides(spec.sides, 3)?;
            Ok(Shape::RegularPolygon {
                vertices: regular_vertices(spec.sides, spec.size, spec.rotation, spec.center),
                radius: spec.size,
            })
        }
        ShapeKind::IrregularConvexPolygon => {
            check_sides(spec.sides, 3)?;
            let vertices = irregular_convex(spec, params, rng)?;
            Ok(Shape::IrregularConvexPolygon {
                vertices,
                radius: spec.size,
            })
        }
        ShapeKind::NonConvexPolygon => {
            check_sides(spec.sides, 4)?;
            let vertices = non_convex(spec, params, rng)?;
            Ok(Shape::NonConvexPolygon {
                vertices,
                radius: spec.size,
            })
        }
        ShapeKind::Circle => Ok(Shape::Circle {
            center: spec.center,
            radius: spec.size,
        }),
        ShapeKind::Polyline => polyline(spec, params, rng),
    }
}

fn check_sides(n: usize, min: usize) -> Result<(), GeometryError> {
    if n < min {
        return Err(GeometryError::InvalidShape(format!(
            "need at least {min} vertices, got {n}"
        )));
    }
    Ok(())
}

fn irregular_convex(spec: &ShapeSpec, params: &ShapeParams, rng: &mut Rng) -> Result<Vec<Point>, GeometryError> {
    let n = spec.sides;
    let step = 2.0 * PI / n as f64;
    for _ in 0..params.max_tries {
        let angles: Vec<f64> = (0..n)
            .map(|k| {
                let j = params.angle_jitter;
                spec.rotation + step * (k as f64 + rng.uniform(-j, j))
            })
            .collect();
        let radii: Vec<f64> = (0..n)
            .map(|_| 1.0 + rng.uniform(-params.radius_jitter, params.radius_jitter))
            .collect();
        let max_r = radii.iter().cloned().fold(0.0, f64::max);
        let vertices: Vec<Point> = angles
            .iter()
            .zip(&radii)
            .map(|(&a, &r)| spec.center + Point::polar(spec.size * r / max_r, a))
            .collect();
        if !is_convex(&vertices)? {
            continue;
        }
        if let Some(cap) = params.convex_max_angle {
            if interior_angles(&vertices).iter().any(|&a| a > cap) {
                continue;
            }
        }
        return Ok(vertices);
    }
    Err(GeometryError::GenerationFailed {
        tries: params.max_tries,
        reason: format!("no convex {n}-gon within jitter bounds"),
    })
}

/// Convex base polygon with one vertex pushed across its neighbours' chord,
/// toward its point reflection through the chord midpoint, until the
/// interior angle there reaches a target drawn from `[reflex_min, 2π - base]`.
fn non_convex(spec: &ShapeSpec, params: &ShapeParams, rng: &mut Rng) -> Result<Vec<Point>, GeometryError> {
    let n = spec.sides;
    for _ in 0..params.max_tries {
        let base_spec = ShapeSpec {
            kind: ShapeKind::IrregularConvexPolygon,
            ..*spec
        };
        let mut base_params = *params;
        base_params.max_tries = 1;
        let Ok(mut vertices) = irregular_convex(&base_spec, &base_params, rng) else {
            continue;
        };
        let k = rng.below(n as u64) as usize;
        let prev = vertices[(k + n - 1) % n];
        let next = vertices[(k + 1) % n];
        let v = vertices[k];
        let base_angle = interior_angles(&vertices)[k];
        let max_reflex = 2.0 * PI - base_angle;
        if max_reflex < params.reflex_min {
            continue;
        }
        let target = rng.uniform(params.reflex_min, max_reflex);
        let reflected = prev + next - v;
        let at = |t: f64| v + (reflected - v) * t;
        let angle_at = |t: f64| vertex_interior_angle(prev, at(t), next);
        // angle_at is increasing on [0.5, 1]: 180° on the chord, 2π - base at the reflection
        let (mut lo, mut hi) = (0.5, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if angle_at(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        vertices[k] = at(hi);
        if angle_at(hi) < params.reflex_min || !is_simple(&vertices) {
            continue;
        }
        if interior_angles(&vertices).iter().any(|&a| a < params.min_angle) {
            continue;
        }
        let clear = (0..n)
            .filter(|&i| i != k && (i + 1) % n != k)
            .map(|i| point_segment_distance(vertices[k], vertices[i], vertices[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min);
        if clear < params.reflex_clearance * spec.size {
            continue;
        }
        return Ok(vertices);
    }
    Err(GeometryError::GenerationFailed {
        tries: params.max_tries,
        reason: format!("no simple non-convex {n}-gon with a reflex vertex"),
    })
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = b - a;
    let len2 = d.dot(d);
    let t = if len2 == 0.0 { 0.0 } else { ((p - a).dot(d) / len2).clamp(0.0, 1.0) };
    (p - (a + d * t)).norm()
}

fn polyline(spec: &ShapeSpec, params: &ShapeParams, rng: &mut Rng) -> Result<Shape, GeometryError> {
    let length = spec.size;
    let dir = Point::polar(1.0, spec.rotation);
    let rel = match spec.sides {
        2 => vec![Point::new(0.0, 0.0), dir * length],
        3 => {
            let (lo, hi) = params.turn_angle_range;
            let interior = rng.uniform(lo, hi);
            let split = rng.uniform(params.arm_split_range.0, params.arm_split_range.1);
            let sign = if rng.chance(0.5) { 1.0 } else { -1.0 };
            let turn = sign * (PI - interior);
            let a = Point::new(0.0, 0.0);
            let b = dir * (length * split);
            let c = b + Point::polar(length * (1.0 - split), spec.rotation + turn);
            vec![a, b, c]
        }
        n => {
            return Err(GeometryError::InvalidShape(format!(
                "polyline needs 2 or 3 waypoints, got {n}"
            )))
        }
    };
    let (lo, hi) = point_bounds(&rel);
    let mid = Point::new(0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y));
    Ok(Shape::Polyline {
        points: rel.into_iter().map(|p| p - mid + spec.center).collect(),
        stroke_width: params.stroke_width,
    })
}

fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    (0..n).map(|i| v[i].cross(v[(i + 1) % n])).sum::<f64>() / 2.0
}

/// True iff all consecutive edge cross products share one sign.
/// Zero cross products (collinear triples) are ignored.
pub fn is_convex(vertices: &[Point]) -> Result<bool, GeometryError> {
    let n = vertices.len();
    if n < 3 {
        return Err(GeometryError::InvalidShape(format!(
            "polygon needs at least 3 vertices, got {n}"
        )));
    }
    let (mut pos, mut neg) = (false, false);
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let c = vertices[(i + 2) % n];
        let z = (b - a).cross(c - b);
        if z > 0.0 {
            pos = true;
        } else if z < 0.0 {
            neg = true;
        }
    }
    Ok(!(pos && neg))
}

/// Interior angle at `v` of a counterclockwise polygon passing `prev -> v -> next`.
pub fn vertex_interior_angle(prev: Point, v: Point, next: Point) -> f64 {
    let d1 = v - prev;
    let d2 = next - v;
    let turn = d1.cross(d2).atan2(d1.dot(d2));
    PI - turn
}

/// Interior angles in radians, in vertex order. Assumes counterclockwise order.
pub fn interior_angles(vertices: &[Point]) -> Vec<f64> {
    let n = vertices.len();
    (0..n)
        .map(|i| vertex_interior_angle(vertices[(i + n - 1) % n], vertices[i], vertices[(i + 1) % n]))
        .collect()
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = (q2 - q1).cross(p1 - q1);
    let d2 = (q2 - q1).cross(p2 - q1);
    let d3 = (p2 - p1).cross(q1 - p1);
    let d4 = (p2 - p1).cross(q2 - p1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |a: Point, b: Point, p: Point, d: f64| {
        d == 0.0 && p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

/// No two non-adjacent edges touch, adjacent edges meet only at their
/// shared vertex, and the orientation is counterclockwise.
pub fn is_simple(vertices: &[Point]) -> bool {
    let n = vertices.len();
    if n < 3 || signed_area(vertices) <= 0.0 {
        return false;
    }
    for i in 0..n {
        if vertices[i] == vertices[(i + 1) % n] {
            return false;
        }
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_intersect(vertices[i], vertices[(i + 1) % n], vertices[j], vertices[(j + 1) % n]) {
                return false;
            }
        }
    }
    // adjacent edges folding back onto each other
    (0..n).all(|i| {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let c = vertices[(i + 2) % n];
        !((b - a).cross(c - b) == 0.0 && (b - a).dot(c - b) < 0.0)
    })
}

/// Area in px². Shoelace for polygons, πr² for circles.
pub fn area(shape: &Shape) -> Result<f64, GeometryError> {
    match shape {
        Shape::Circle { radius, .. } => Ok(PI * radius * radius),
        Shape::Polyline { .. } => Err(GeometryError::Unsupported("a polyline has no area")),
        _ => Ok(signed_area(shape.polygon().unwrap()).abs()),
    }
}

pub fn centroid(shape: &Shape) -> Point {
    match shape {
        Shape::Circle { center, .. } => *center,
        Shape::Polyline { points, .. } => {
            let total = polyline_length(points);
            if total == 0.0 {
                return points[0];
            }
            points
                .windows(2)
                .map(|w| (w[0] + w[1]) * (0.5 * (w[1] - w[0]).norm() / total))
                .fold(Point::default(), |a, b| a + b)
        }
        _ => {
            let v = shape.polygon().unwrap();
            let n = v.len();
            let a = signed_area(v);
            let mut c = Point::default();
            for i in 0..n {
                let (p, q) = (v[i], v[(i + 1) % n]);
                let w = p.cross(q);
                c = c + (p + q) * w;
            }
            c * (1.0 / (6.0 * a))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairRelation {
    /// `centroid(a).x - centroid(b).x`
    pub centroid_dx: f64,
    pub disjoint: bool,
    pub overlap_fraction_of_smaller: f64,
}

/// Raster-level relation of two area shapes: `disjoint` means no pixel of
/// one lies within `guard_px` of a pixel of the other.
pub fn pair_relation(a: &Shape, b: &Shape, guard_px: f64) -> PairRelation {
    let ca = Coverage::of_shape(a);
    let cb = Coverage::of_shape(b);
    let inter = ca.intersection_count(&cb);
    let smaller = ca.count().min(cb.count());
    PairRelation {
        centroid_dx: centroid(a).x - centroid(b).x,
        disjoint: !ca.within_distance(&cb, guard_px),
        overlap_fraction_of_smaller: if smaller == 0 {
            0.0
        } else {
            inter as f64 / smaller as f64
        },
    }
}

/// True iff every waypoint lies on one straight line without turning,
/// within 1e-6 rad.
pub fn straightness_oracle(points: &[Point]) -> Result<bool, GeometryError> {
    if !(2..=3).contains(&points.len()) {
        return Err(GeometryError::InvalidShape(format!(
            "polyline needs 2 or 3 waypoints, got {}",
            points.len()
        )));
    }
    if points.windows(2).any(|w| (w[1] - w[0]).norm() == 0.0) {
        return Err(GeometryError::InvalidShape("zero-length segment".into()));
    }
    if points.len() == 2 {
        return Ok(true);
    }
    Ok(turn_angle(points[0], points[1], points[2]).abs() <= 1e-6)
}

/// Signed heading change at `b` along `a -> b -> c`; 0 for a straight continuation.
pub fn turn_angle(a: Point, b: Point, c: Point) -> f64 {
    let d1 = b - a;
    let d2 = c - b;
    d1.cross(d2).atan2(d1.dot(d2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Vec<Point> {
        vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ]
    }

    fn spec(kind: ShapeKind, sides: usize, size: f64) -> ShapeSpec {
        ShapeSpec {
            kind,
            sides,
            size,
            rotation: 0.3,
            center: Point::new(112.0, 112.0),
        }
    }

    #[test]
    fn regular_square_vertices() {
        let s = gen_shape(
            &ShapeSpec {
                kind: ShapeKind::RegularPolygon,
                sides: 4,
                size: 10.0,
                rotation: 0.0,
                center: Point::new(0.0, 0.0),
            },
            &ShapeParams::default(),
            &mut Rng::new(0),
        )
        .unwrap();
        let expect = [(10.0, 0.0), (0.0, 10.0), (-10.0, 0.0), (0.0, -10.0)];
        for (v, e) in s.polygon().unwrap().iter().zip(expect) {
            assert!((v.x - e.0).abs() < 1e-12 && (v.y - e.1).abs() < 1e-12, "{v:?}");
        }
    }

    #[test]
    fn square_convexity() {
        assert!(is_convex(&unit_square()).unwrap());
        let mut sq = unit_square();
        // reflect (1,1) through the midpoint of (1,0)-(0,1)
        sq[2] = sq[1] + sq[3] - sq[2];
        assert!(!is_convex(&sq).unwrap());
    }

    #[test]
    fn collinear_vertices_still_convex() {
        let v = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 2.0),
            Point::new(0.0, 2.0),
        ];
        assert!(is_convex(&v).unwrap());
    }

    #[test]
    fn too_few_vertices_is_error() {
        assert!(matches!(
            is_convex(&[Point::new(0.0, 0.0), Point::new(1.0, 0.0)]),
            Err(GeometryError::InvalidShape(_))
        ));
    }

    #[test]
    fn non_convex_pentagon_has_reflex_vertex() {
        let params = ShapeParams::default();
        let mut rng = Rng::new(5);
        for _ in 0..200 {
            let s = gen_shape(&spec(ShapeKind::NonConvexPolygon, 5, 30.0), &params, &mut rng).unwrap();
            let v = s.polygon().unwrap();
            assert!(!is_convex(v).unwrap());
            assert!(is_simple(v));
            let max = interior_angles(v).into_iter().fold(0.0, f64::max);
            assert!(max >= params.reflex_min - 1e-9, "max angle {}", max.to_degrees());
        }
    }

    #[test]
    fn generated_convex_shapes_sweep() {
        let params = ShapeParams::default();
        let mut rng = Rng::new(17);
        for i in 0..10_000 {
            let s = gen_shape(&spec(ShapeKind::IrregularConvexPolygon, 6, 25.0), &params, &mut rng).unwrap();
            assert!(is_convex(s.polygon().unwrap()).unwrap(), "draw {i}");
        }
        for i in 0..10_000 {
            let n = 3 + i % 4;
            let mut sp = spec(ShapeKind::RegularPolygon, n, 5.0 + (i % 50) as f64);
            sp.rotation = rng.uniform(0.0, 2.0 * PI);
            let s = gen_shape(&sp, &params, &mut rng).unwrap();
            assert!(is_convex(s.polygon().unwrap()).unwrap());
        }
    }

    #[test]
    fn convex_angle_cap_is_honoured() {
        let params = ShapeParams {
            convex_max_angle: Some(150f64.to_radians()),
            ..Default::default()
        };
        let mut rng = Rng::new(8);
        for n in 4..=6 {
            for _ in 0..500 {
                let s = gen_shape(&spec(ShapeKind::IrregularConvexPolygon, n, 30.0), &params, &mut rng).unwrap();
                assert!(interior_angles(s.polygon().unwrap())
                    .iter()
                    .all(|&a| a <= 150f64.to_radians()));
            }
        }
    }

    #[test]
    fn area_examples() {
        let sq = Shape::RegularPolygon {
            vertices: unit_square(),
            radius: 0.5f64.sqrt(),
        };
        assert!((area(&sq).unwrap() - 1.0).abs() < 1e-12);
        let c = Shape::Circle {
            center: Point::new(0.0, 0.0),
            radius: 10.0,
        };
        assert_eq!(area(&c).unwrap(), 100.0 * PI);
        let line = Shape::Polyline {
            points: vec![Point::new(0.0, 0.0), Point::new(1.0, 1.0)],
            stroke_width: 3.0,
        };
        assert!(matches!(area(&line), Err(GeometryError::Unsupported(_))));
    }

    #[test]
    fn hexagon_area_matches_monte_carlo() {
        // oracle: point sampling in the bounding square, independent of the shoelace path
        let s = gen_shape(&spec(ShapeKind::RegularPolygon, 6, 20.0), &ShapeParams::default(), &mut Rng::new(0)).unwrap();
        let v = s.polygon().unwrap().to_vec();
        let inside = |p: Point| {
            (0..v.len()).all(|i| (v[(i + 1) % v.len()] - v[i]).cross(p - v[i]) >= 0.0)
        };
        let mut rng = Rng::new(99);
        let c = Point::new(112.0, 112.0);
        let samples = 1_000_000;
        let hits = (0..samples)
            .filter(|_| inside(c + Point::new(rng.uniform(-20.0, 20.0), rng.uniform(-20.0, 20.0))))
            .count();
        let mc = 1600.0 * hits as f64 / samples as f64;
        let analytic = 1.5 * 3f64.sqrt() * 400.0;
        assert!((mc - analytic).abs() / analytic < 0.005, "mc {mc}");
        assert!((area(&s).unwrap() - analytic).abs() < 1e-9);
        assert!((analytic - 1039.23).abs() < 0.01);
    }

    #[test]
    fn regular_area_closed_form() {
        let mut rng = Rng::new(4);
        for n in 3..=12 {
            let r = rng.uniform(5.0, 80.0);
            let mut sp = spec(ShapeKind::RegularPolygon, n, r);
            sp.rotation = rng.uniform(0.0, 6.0);
            let s = gen_shape(&sp, &ShapeParams::default(), &mut rng).unwrap();
            let closed = 0.5 * n as f64 * r * r * (2.0 * PI / n as f64).sin();
            assert!((area(&s).unwrap() - closed).abs() / closed < 1e-6);
        }
    }

    #[test]
    fn pair_relation_examples() {
        let sq = |cx: f64, half: f64| {
            gen_shape(
                &ShapeSpec {
                    kind: ShapeKind::RegularPolygon,
                    sides: 4,
                    size: half * 2f64.sqrt(),
                    rotation: PI / 4.0,
                    center: Point::new(cx, 256.0),
                },
                &ShapeParams::default(),
                &mut Rng::new(0),
            )
            .unwrap()
        };
        let far = pair_relation(&sq(100.0, 0.5), &sq(200.0, 0.5), 3.0);
        assert!(far.disjoint);
        assert_eq!(far.overlap_fraction_of_smaller, 0.0);
        let same = pair_relation(&sq(100.0, 20.0), &sq(100.0, 20.0), 3.0);
        assert!(!same.disjoint);
        assert_eq!(same.overlap_fraction_of_smaller, 1.0);
        // axis-aligned squares of half-side 20, offset by 20
        let half = pair_relation(&sq(256.0, 20.0), &sq(276.0, 20.0), 3.0);
        assert!((half.overlap_fraction_of_smaller - 0.5).abs() < 0.02);
        assert!((half.centroid_dx + 20.0).abs() < 1e-9);
    }

    #[test]
    fn straightness_examples() {
        let p = |x, y| Point::new(x, y);
        assert!(straightness_oracle(&[p(0.0, 0.0), p(50.0, 50.0)]).unwrap());
        assert!(!straightness_oracle(&[p(0.0, 0.0), p(30.0, 0.0), p(60.0, 30.0)]).unwrap());
        assert!(straightness_oracle(&[p(0.0, 0.0), p(30.0, 0.0), p(60.0, 0.0)]).unwrap());
        assert!(straightness_oracle(&[p(0.0, 0.0), p(0.0, 0.0)]).is_err());
        assert!(straightness_oracle(&[p(0.0, 0.0)]).is_err());
    }

    #[test]
    fn broken_polylines_are_never_straight() {
        let params = ShapeParams::default();
        let mut rng = Rng::new(21);
        for _ in 0..5000 {
            let mut sp = spec(ShapeKind::Polyline, 3, rng.uniform(10.0, 200.0));
            sp.rotation = rng.uniform(0.0, 2.0 * PI);
            let s = gen_shape(&sp, &params, &mut rng).unwrap();
            let Shape::Polyline { points, .. } = &s else { unreachable!() };
            assert!(!straightness_oracle(points).unwrap());
            assert!((s.size_param() - sp.size).abs() < 1e-9);
            let interior = PI - turn_angle(points[0], points[1], points[2]).abs();
            assert!(interior >= params.turn_angle_range.0 - 1e-9 && interior <= params.turn_angle_range.1 + 1e-9);
        }
    }

    #[test]
    fn generation_is_seed_deterministic() {
        let params = ShapeParams::default();
        for kind in [ShapeKind::IrregularConvexPolygon, ShapeKind::NonConvexPolygon, ShapeKind::Polyline] {
            let sides = if kind == ShapeKind::Polyline { 3 } else { 5 };
            let a = gen_shape(&spec(kind, sides, 30.0), &params, &mut Rng::new(77)).unwrap();
            let b = gen_shape(&spec(kind, sides, 30.0), &params, &mut Rng::new(77)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let params = ShapeParams::default();
        let mut rng = Rng::new(0);
        assert!(gen_shape(&spec(ShapeKind::RegularPolygon, 4, 0.0), &params, &mut rng).is_err());
        assert!(gen_shape(&spec(ShapeKind::NonConvexPolygon, 3, 10.0), &params, &mut rng).is_err());
        assert!(gen_shape(&spec(ShapeKind::Polyline, 4, 10.0), &params, &mut rng).is_err());
        let impossible = ShapeParams {
            convex_max_angle: Some(10f64.to_radians()),
            max_tries: 20,
            ..Default::default()
        };
        assert!(matches!(
            gen_shape(&spec(ShapeKind::IrregularConvexPolygon, 5, 10.0), &impossible, &mut rng),
            Err(GeometryError::GenerationFailed { tries: 20, .. })
        ));
    }

    #[test]
    fn mirror_keeps_orientation() {
        let s = gen_shape(&spec(ShapeKind::IrregularConvexPolygon, 5, 30.0), &ShapeParams::default(), &mut Rng::new(2)).unwrap();
        let m = s.mirrored_x(112.0);
        assert!(is_simple(m.polygon().unwrap()));
        assert!((centroid(&m).x - (224.0 - centroid(&s).x)).abs() < 1e-9);
    }
}
