//! Deterministic rasterization of scenes to palette-valued grayscale images.
//!
//! Pixel `(px, py)` is sampled at its center `(px + 0.5, py + 0.5)`.
//! Polygons use a scanline fill with half-open edge rules: an edge covers
//! rows whose center `y` lies in `[y_min, y_max)` and a span covers centers
//! with `x_left <= x < x_right`, so ties go to the lower coordinate.
//! Circles and stroked polylines cover centers at distance `<=` the radius
//! (half the stroke width) from the center or segment. There is no
//! anti-aliasing.
//!
//! All arithmetic is done relative to an integer anchor taken from the first
//! defining point, so translating a shape by whole pixels (when the
//! translation itself is exact) translates its coverage exactly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point, Shape};
use crate::tasks::Task;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenderError {
    #[error("object {index} ({kind}) leaves the {width}x{height} canvas or its {margin} px margin")]
    OutOfBounds {
        index: usize,
        kind: &'static str,
        width: u32,
        height: u32,
        margin: u32,
    },
    #[error("object index {0} out of range")]
    NoSuchObject(usize),
}

/// The three palette levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Color {
    Black,
    Grey,
    White,
}

impl Color {
    pub const ALL: [Color; 3] = [Color::Black, Color::Grey, Color::White];

    pub fn level(self) -> u8 {
        match self {
            Color::Black => 0,
            Color::Grey => 128,
            Color::White => 255,
        }
    }

    pub fn from_level(level: u8) -> Option<Color> {
        match level {
            0 => Some(Color::Black),
            128 => Some(Color::Grey),
            255 => Some(Color::White),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Color::Black => "black",
            Color::Grey => "grey",
            Color::White => "white",
        }
    }
}

/// 8-bit grayscale image, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn filled(width: u32, height: u32, level: u8) -> Self {
        GrayImage {
            width,
            height,
            pixels: vec![level; width as usize * height as usize],
        }
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, v: u8) {
        let w = self.width as usize;
        self.pixels[y as usize * w + x as usize] = v;
    }

    pub fn count_level(&self, level: u8) -> usize {
        self.pixels.iter().filter(|&&p| p == level).count()
    }

    /// True when every pixel is a palette level.
    pub fn is_palette_closed(&self) -> bool {
        self.pixels.iter().all(|&p| Color::from_level(p).is_some())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub shape: Shape,
    pub color: Color,
    /// Higher draws later, i.e. in front.
    pub z: i32,
}

/// Vector description of one labelled image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub task: Task,
    pub objects: Vec<SceneObject>,
    pub background: Color,
    pub label: u8,
    pub seed: u64,
}

impl Scene {
    pub fn empty(task: Task, background: Color) -> Self {
        Scene {
            task,
            objects: Vec::new(),
            background,
            label: 0,
            seed: 0,
        }
    }

    /// Indices of objects in drawing order (ascending z, ties by index).
    pub fn draw_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.objects.len()).collect();
        order.sort_by_key(|&i| (self.objects[i].z, i));
        order
    }
}

/// Margin every object must keep from the canvas border.
pub const CANVAS_MARGIN: u32 = 2;

fn check_bounds(shape: &Shape, index: usize, w: u32, h: u32) -> Result<(), RenderError> {
    let (lo, hi) = shape.bounds();
    let m = CANVAS_MARGIN as f64;
    if lo.x < m || lo.y < m || hi.x > w as f64 - m || hi.y > h as f64 - m {
        return Err(RenderError::OutOfBounds {
            index,
            kind: shape.kind().as_str(),
            width: w,
            height: h,
            margin: CANVAS_MARGIN,
        });
    }
    Ok(())
}

/// Background first, then objects in ascending z (painter's algorithm).
pub fn rasterize_scene(scene: &Scene, width: u32, height: u32) -> Result<GrayImage, RenderError> {
    for (i, o) in scene.objects.iter().enumerate() {
        check_bounds(&o.shape, i, width, height)?;
    }
    let mut img = GrayImage::filled(width, height, scene.background.level());
    for i in scene.draw_order() {
        let o = &scene.objects[i];
        Coverage::of_shape(&o.shape).paint(&mut img, o.color.level());
    }
    Ok(img)
}

/// Only object `index`, drawn on the scene background.
pub fn render_object_solo(scene: &Scene, index: usize, width: u32, height: u32) -> Result<GrayImage, RenderError> {
    let o = scene.objects.get(index).ok_or(RenderError::NoSuchObject(index))?;
    check_bounds(&o.shape, index, width, height)?;
    let mut img = GrayImage::filled(width, height, scene.background.level());
    Coverage::of_shape(&o.shape).paint(&mut img, o.color.level());
    Ok(img)
}

/// A horizontal run of covered pixels `[x0, x1)` on row `y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Span {
    pub y: i64,
    pub x0: i64,
    pub x1: i64,
}

/// Pixel coverage of a shape on the unbounded integer grid, as sorted,
/// non-overlapping spans.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Coverage {
    spans: Vec<Span>,
}

impl Coverage {
    pub fn of_shape(shape: &Shape) -> Coverage {
        match shape {
            Shape::Circle { center, radius } => disk_coverage(*center, *radius),
            Shape::Polyline {
                points,
                stroke_width,
            } => stroke_coverage(points, stroke_width / 2.0),
            _ => polygon_coverage(shape.polygon().unwrap()),
        }
    }

    fn from_rows(rows: BTreeMap<i64, Vec<(i64, i64)>>) -> Coverage {
        let mut spans = Vec::new();
        for (y, mut runs) in rows {
            runs.sort();
            let mut cur: Option<(i64, i64)> = None;
            for (a, b) in runs {
                if a >= b {
                    continue;
                }
                cur = match cur {
                    Some((c0, c1)) if a <= c1 => Some((c0, c1.max(b))),
                    Some((c0, c1)) => {
                        spans.push(Span { y, x0: c0, x1: c1 });
                        Some((a, b))
                    }
                    None => Some((a, b)),
                };
            }
            if let Some((c0, c1)) = cur {
                spans.push(Span { y, x0: c0, x1: c1 });
            }
        }
        Coverage { spans }
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn count(&self) -> usize {
        self.spans.iter().map(|s| (s.x1 - s.x0) as usize).sum()
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        self.spans.iter().any(|s| s.y == y && s.x0 <= x && x < s.x1)
    }

    fn rows(&self) -> BTreeMap<i64, Vec<(i64, i64)>> {
        let mut m: BTreeMap<i64, Vec<(i64, i64)>> = BTreeMap::new();
        for s in &self.spans {
            m.entry(s.y).or_default().push((s.x0, s.x1));
        }
        m
    }

    pub fn intersection_count(&self, other: &Coverage) -> usize {
        let theirs = other.rows();
        let mut n = 0;
        for s in &self.spans {
            if let Some(runs) = theirs.get(&s.y) {
                for &(a, b) in runs {
                    n += (s.x1.min(b) - s.x0.max(a)).max(0) as usize;
                }
            }
        }
        n
    }

    /// Some pixel of `self` is within Euclidean distance `d` of a pixel of `other`.
    pub fn within_distance(&self, other: &Coverage, d: f64) -> bool {
        let theirs = other.rows();
        let reach = d.max(0.0).floor() as i64;
        for s in &self.spans {
            for dy in -reach..=reach {
                let Some(runs) = theirs.get(&(s.y + dy)) else {
                    continue;
                };
                let dx = (d * d - (dy * dy) as f64).max(0.0).sqrt().floor() as i64;
                if runs.iter().any(|&(a, b)| a < s.x1 + dx && s.x0 - dx < b) {
                    return true;
                }
            }
        }
        false
    }

    /// Paint covered pixels that fall on the image; others are clipped.
    pub fn paint(&self, img: &mut GrayImage, level: u8) {
        let (w, h) = (img.width as i64, img.height as i64);
        for s in &self.spans {
            if s.y < 0 || s.y >= h {
                continue;
            }
            let (a, b) = (s.x0.max(0), s.x1.min(w));
            if a >= b {
                continue;
            }
            let row = s.y as usize * w as usize;
            img.pixels[row + a as usize..row + b as usize].fill(level);
        }
    }
}

fn anchor_of(p: Point) -> (i64, i64) {
    (p.x.floor() as i64, p.y.floor() as i64)
}

fn polygon_coverage(vertices: &[Point]) -> Coverage {
    let (ax, ay) = anchor_of(vertices[0]);
    let local: Vec<Point> = vertices
        .iter()
        .map(|p| Point::new(p.x - ax as f64, p.y - ay as f64))
        .collect();
    let y_min = local.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
    let y_max = local.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
    let n = local.len();
    let mut rows = BTreeMap::new();
    // rows whose centers fall in [y_min, y_max)
    let first = (y_min - 0.5).ceil() as i64;
    let last = (y_max - 0.5).ceil() as i64;
    let mut xs = Vec::with_capacity(n);
    for ly in first..last {
        let yc = ly as f64 + 0.5;
        xs.clear();
        for i in 0..n {
            let (mut a, mut b) = (local[i], local[(i + 1) % n]);
            if a.y == b.y {
                continue;
            }
            if a.y > b.y {
                std::mem::swap(&mut a, &mut b);
            }
            if yc < a.y || yc >= b.y {
                continue;
            }
            xs.push(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
        }
        xs.sort_by(f64::total_cmp);
        let runs: Vec<(i64, i64)> = xs
            .chunks_exact(2)
            .map(|c| {
                let x0 = (c[0] - 0.5).ceil() as i64 + ax;
                let x1 = (c[1] - 0.5).ceil() as i64 + ax;
                (x0, x1)
            })
            .collect();
        if !runs.is_empty() {
            rows.insert(ly + ay, runs);
        }
    }
    Coverage::from_rows(rows)
}

fn disk_coverage(center: Point, radius: f64) -> Coverage {
    let (ax, ay) = anchor_of(center);
    let c = Point::new(center.x - ax as f64, center.y - ay as f64);
    let r2 = radius * radius;
    let mut rows = BTreeMap::new();
    let y0 = (c.y - radius - 1.0).floor() as i64;
    let y1 = (c.y + radius + 1.0).ceil() as i64;
    for ly in y0..=y1 {
        let dy = ly as f64 + 0.5 - c.y;
        let rem = r2 - dy * dy;
        if rem < 0.0 {
            continue;
        }
        // scan outward from the estimate so the test itself decides membership
        let half = rem.sqrt();
        let mut lo = (c.x - half - 0.5).floor() as i64 - 1;
        let mut hi = (c.x + half - 0.5).ceil() as i64 + 1;
        let inside = |lx: i64| {
            let dx = lx as f64 + 0.5 - c.x;
            dx * dx + dy * dy <= r2
        };
        while lo <= hi && !inside(lo) {
            lo += 1;
        }
        while hi >= lo && !inside(hi) {
            hi -= 1;
        }
        if lo <= hi {
            rows.insert(ly + ay, vec![(lo + ax, hi + 1 + ax)]);
        }
    }
    Coverage::from_rows(rows)
}

fn segment_dist2(p: Point, a: Point, b: Point) -> f64 {
    let d = b - a;
    let len2 = d.dot(d);
    let t = if len2 == 0.0 {
        0.0
    } else {
        ((p - a).dot(d) / len2).clamp(0.0, 1.0)
    };
    let q = a + d * t;
    (p - q).dot(p - q)
}

fn stroke_coverage(points: &[Point], half_width: f64) -> Coverage {
    let (ax, ay) = anchor_of(points[0]);
    let local: Vec<Point> = points
        .iter()
        .map(|p| Point::new(p.x - ax as f64, p.y - ay as f64))
        .collect();
    let hw2 = half_width * half_width;
    let mut rows: BTreeMap<i64, Vec<(i64, i64)>> = BTreeMap::new();
    for seg in local.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let y0 = (a.y.min(b.y) - half_width - 1.0).floor() as i64;
        let y1 = (a.y.max(b.y) + half_width + 1.0).ceil() as i64;
        let x0 = (a.x.min(b.x) - half_width - 1.0).floor() as i64;
        let x1 = (a.x.max(b.x) + half_width + 1.0).ceil() as i64;
        for ly in y0..=y1 {
            let yc = ly as f64 + 0.5;
            // the capsule is convex, so each row is a single run
            let mut run: Option<(i64, i64)> = None;
            for lx in x0..=x1 {
                if segment_dist2(Point::new(lx as f64 + 0.5, yc), a, b) <= hw2 {
                    run = Some(match run {
                        Some((s, _)) => (s, lx + 1),
                        None => (lx, lx + 1),
                    });
                }
            }
            if let Some((s, e)) = run {
                rows.entry(ly + ay).or_default().push((s + ax, e + ax));
            }
        }
    }
    Coverage::from_rows(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{area, gen_shape, ShapeKind, ShapeParams, ShapeSpec};
    use crate::rng::Rng;

    fn square(cx: f64, cy: f64, r: f64) -> Shape {
        gen_shape(
            &ShapeSpec {
                kind: ShapeKind::RegularPolygon,
                sides: 4,
                size: r,
                rotation: std::f64::consts::FRAC_PI_4,
                center: Point::new(cx, cy),
            },
            &ShapeParams::default(),
            &mut Rng::new(0),
        )
        .unwrap()
    }

    #[test]
    fn empty_scene_is_background() {
        let s = Scene::empty(Task::LeftRight, Color::Black);
        let img = rasterize_scene(&s, 224, 224).unwrap();
        assert!(img.pixels.iter().all(|&p| p == 0));
        assert_eq!(img.pixels.len(), 224 * 224);
    }

    #[test]
    fn square_pixel_count_tracks_area() {
        // half-side 50; a circumradius-50 square at this center loses exactly
        // 2% to the pixel-center rule, see below
        let shape = square(112.0, 112.0, 50.0 * std::f64::consts::SQRT_2);
        let mut s = Scene::empty(Task::Convexity, Color::Black);
        s.objects.push(SceneObject {
            shape: shape.clone(),
            color: Color::White,
            z: 0,
        });
        let img = rasterize_scene(&s, 224, 224).unwrap();
        let fg = img.count_level(255) as f64;
        let a = area(&shape).unwrap();
        assert!((fg - a).abs() / a <= 0.02, "fg {fg} area {a}");
        assert_eq!(fg, 10_000.0);
        s.objects[0].shape = square(112.0, 112.0, 50.0);
        let img = rasterize_scene(&s, 224, 224).unwrap();
        assert_eq!(img.count_level(255), 70 * 70);
    }

    #[test]
    fn axis_aligned_rect_exact_count() {
        // [10,20) x [5,9): centers 10.5..19.5 and 5.5..8.5
        let v = vec![
            Point::new(10.0, 5.0),
            Point::new(20.0, 5.0),
            Point::new(20.0, 9.0),
            Point::new(10.0, 9.0),
        ];
        let c = polygon_coverage(&v);
        assert_eq!(c.count(), 40);
        assert!(c.contains(10, 5) && c.contains(19, 8));
        assert!(!c.contains(20, 5) && !c.contains(10, 9));
    }

    #[test]
    fn front_object_matches_solo_render() {
        let mut s = Scene::empty(Task::FrontBack, Color::Grey);
        s.objects.push(SceneObject {
            shape: square(100.0, 100.0, 30.0),
            color: Color::White,
            z: 1,
        });
        s.objects.push(SceneObject {
            shape: square(120.0, 110.0, 30.0),
            color: Color::Black,
            z: 0,
        });
        let full = rasterize_scene(&s, 224, 224).unwrap();
        let front = render_object_solo(&s, 0, 224, 224).unwrap();
        let back = render_object_solo(&s, 1, 224, 224).unwrap();
        for (i, (&f, &p)) in full.pixels.iter().zip(&front.pixels).enumerate() {
            if p == 255 {
                assert_eq!(f, 255, "pixel {i}");
            } else {
                assert_ne!(f, 255);
            }
        }
        assert!(back.count_level(0) > full.count_level(0));
    }

    #[test]
    fn out_of_bounds_names_object() {
        let mut s = Scene::empty(Task::Size, Color::Black);
        s.objects.push(SceneObject {
            shape: square(100.0, 100.0, 10.0),
            color: Color::White,
            z: 0,
        });
        s.objects.push(SceneObject {
            shape: square(5.0, 100.0, 10.0),
            color: Color::Grey,
            z: 1,
        });
        match rasterize_scene(&s, 224, 224) {
            Err(RenderError::OutOfBounds { index: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert_eq!(render_object_solo(&s, 7, 224, 224), Err(RenderError::NoSuchObject(7)));
    }

    #[test]
    fn stroke_is_three_pixels_thick() {
        let line = Shape::Polyline {
            points: vec![Point::new(20.0, 50.5), Point::new(80.0, 50.5)],
            stroke_width: 3.0,
        };
        let c = Coverage::of_shape(&line);
        // column x=50 covers rows 49..=51
        let col: Vec<i64> = (40..60).filter(|&y| c.contains(50, y)).collect();
        assert_eq!(col, vec![49, 50, 51]);
    }

    #[test]
    fn distance_queries_are_symmetric() {
        let a = Coverage::of_shape(&square(50.0, 50.0, 10.0));
        let b = Coverage::of_shape(&square(66.0, 50.0, 10.0));
        for d in [0.0, 1.0, 2.0, 3.0, 5.0, 10.0] {
            assert_eq!(a.within_distance(&b, d), b.within_distance(&a, d), "d={d}");
        }
    }
}
