use std::f64::consts::PI;

use rayon::prelude::*;

use super::{
    make_size_splits, threads_from_env, with_pool, ColorMode, DatasetManifest, ManifestEntry, SizeRanges, Split,
    SplitPolicy, Task, TaskConfig, TaskError,
};
use crate::geometry::{self, Point, Shape, ShapeKind, ShapeParams, ShapeSpec};
use crate::raster::{Color, Coverage, Scene, SceneObject, CANVAS_MARGIN};
use crate::rng::{derive_seed, Rng};

/// Generate both splits of `cfg` on `threads` workers (`0` = automatic).
///
/// Item `i` of a split draws everything from its own stream
/// `derive_seed(derive_seed(seed, split), i)` and has label `i % 2`, so the
/// output is independent of scheduling and exactly balanced.
pub fn generate(cfg: &TaskConfig, threads: usize) -> Result<DatasetManifest, TaskError> {
    cfg.validate()?;
    let splits = make_size_splits(cfg.size_range, cfg.policy)?;
    let jobs: Vec<(Split, usize)> = [Split::Train, Split::Test]
        .into_iter()
        .flat_map(|s| (0..2 * cfg.count(s)).map(move |i| (s, i)))
        .collect();
    let entries = with_pool(threads, || {
        jobs.par_iter()
            .map(|&(split, index)| {
                let sizes = match split {
                    Split::Train => &splits.train,
                    Split::Test => &splits.test,
                };
                let scene = generate_scene(cfg, sizes, split, index)?;
                Ok(ManifestEntry::from_scene(cfg, split, index, scene))
            })
            .collect::<Result<Vec<_>, TaskError>>()
    })??;
    Ok(DatasetManifest { entries })
}

fn checked(cfg: &TaskConfig, task: Task) -> Result<DatasetManifest, TaskError> {
    if cfg.task != task {
        return Err(TaskError::InvalidConfig(format!(
            "config is for {}, not {task}",
            cfg.task
        )));
    }
    generate(cfg, threads_from_env())
}

/// Two disjoint objects; label 1 iff the brighter centroid is left of the darker.
pub fn gen_left_right(cfg: &TaskConfig) -> Result<DatasetManifest, TaskError> {
    checked(cfg, Task::LeftRight)
}

/// Two overlapping objects, both partly visible; label 1 iff the brighter is in front.
pub fn gen_front_back(cfg: &TaskConfig) -> Result<DatasetManifest, TaskError> {
    checked(cfg, Task::FrontBack)
}

/// Two disjoint objects of clearly different area; label 1 iff the brighter is larger.
pub fn gen_size(cfg: &TaskConfig) -> Result<DatasetManifest, TaskError> {
    checked(cfg, Task::Size)
}

/// One 4-, 5- or 6-gon; label 1 iff convex.
pub fn gen_convexity(cfg: &TaskConfig) -> Result<DatasetManifest, TaskError> {
    checked(cfg, Task::Convexity)
}

/// One stroked polyline; label 1 iff straight.
pub fn gen_straightness(cfg: &TaskConfig) -> Result<DatasetManifest, TaskError> {
    checked(cfg, Task::Straightness)
}

/// The scene of item `index` in `split`, with sizes drawn from `sizes`.
pub fn generate_scene(cfg: &TaskConfig, sizes: &SizeRanges, split: Split, index: usize) -> Result<Scene, TaskError> {
    let seed = derive_seed(derive_seed(cfg.seed, split.stream()), index as u64);
    let mut rng = Rng::new(seed);
    let label = (index % 2) as u8;
    let fail = |reason: String| TaskError::Generation { split, index, reason };
    let (background, objects) = match cfg.task {
        Task::LeftRight | Task::Size => disjoint_pair(cfg, sizes, split, label, &mut rng).map_err(fail)?,
        Task::FrontBack => overlapping_pair(cfg, sizes, split, label, &mut rng).map_err(fail)?,
        Task::Convexity | Task::Straightness => single(cfg, sizes, label, &mut rng).map_err(fail)?,
    };
    Ok(Scene {
        task: cfg.task,
        objects,
        background,
        label,
        seed,
    })
}

/// `(kind, sides)` choices for the objects of a two-object scene.
fn shape_pool(policy: SplitPolicy, split: Split) -> Vec<(ShapeKind, usize)> {
    match (split, policy) {
        (Split::Test, SplitPolicy::IrregularConvex) => (3..=6).map(|n| (ShapeKind::IrregularConvexPolygon, n)).collect(),
        (Split::Test, SplitPolicy::NonConvex) => (4..=6).map(|n| (ShapeKind::NonConvexPolygon, n)).collect(),
        _ => (3..=6)
            .map(|n| (ShapeKind::RegularPolygon, n))
            .chain([(ShapeKind::Circle, 0)])
            .collect(),
    }
}

/// A shape of a random kind from `pool`, centered at the origin.
fn pooled_shape(
    pool: &[(ShapeKind, usize)],
    sizes: &SizeRanges,
    params: &ShapeParams,
    rng: &mut Rng,
) -> Result<Shape, String> {
    let &(kind, sides) = rng.choose(pool);
    let spec = ShapeSpec {
        kind,
        sides,
        size: sizes.sample(rng),
        rotation: rng.uniform(0.0, 2.0 * PI),
        center: Point::default(),
    };
    geometry::gen_shape(&spec, params, rng).map_err(|e| e.to_string())
}

/// Uniform translation putting all of `shapes` inside the canvas margin.
fn random_offset(shapes: &[&Shape], canvas: (u32, u32), rng: &mut Rng) -> Option<(f64, f64)> {
    let (mut lo, mut hi) = shapes[0].bounds();
    for s in &shapes[1..] {
        let (a, b) = s.bounds();
        lo = Point::new(lo.x.min(a.x), lo.y.min(a.y));
        hi = Point::new(hi.x.max(b.x), hi.y.max(b.y));
    }
    // half a pixel inside the render margin so rounding never trips it
    let m = CANVAS_MARGIN as f64 + 0.5;
    let (x0, x1) = (m - lo.x, canvas.0 as f64 - m - hi.x);
    let (y0, y1) = (m - lo.y, canvas.1 as f64 - m - hi.y);
    if x0 > x1 || y0 > y1 {
        return None;
    }
    Some((rng.uniform(x0, x1), rng.uniform(y0, y1)))
}

fn pair_colors(mode: ColorMode, rng: &mut Rng) -> (Color, Color, Color) {
    let (bg, a, b) = match mode {
        ColorMode::TwoColor => {
            let mut objs = [Color::Grey, Color::White];
            rng.shuffle(&mut objs);
            (Color::Black, objs[0], objs[1])
        }
        ColorMode::ThreeColor => {
            let mut all = Color::ALL;
            rng.shuffle(&mut all);
            (all[0], all[1], all[2])
        }
    };
    if a.level() > b.level() {
        (bg, a, b)
    } else {
        (bg, b, a)
    }
}

/// Give the brighter color to object `bright`, the darker to the other.
fn colored(shapes: [Shape; 2], z: [i32; 2], bright: usize, hi: Color, lo: Color) -> Vec<SceneObject> {
    shapes
        .into_iter()
        .zip(z)
        .enumerate()
        .map(|(i, (shape, z))| SceneObject {
            shape,
            color: if i == bright { hi } else { lo },
            z,
        })
        .collect()
}

fn disjoint_pair(
    cfg: &TaskConfig,
    sizes: &SizeRanges,
    split: Split,
    label: u8,
    rng: &mut Rng,
) -> Result<(Color, Vec<SceneObject>), String> {
    let pool = shape_pool(cfg.policy, split);
    let params = cfg.shape_params();
    let dx_min = cfg.centroid_dx_min();
    for _ in 0..cfg.max_tries {
        let a = pooled_shape(&pool, sizes, &params, rng)?;
        let b = pooled_shape(&pool, sizes, &params, rng)?;
        let (Some(oa), Some(ob)) = (
            random_offset(&[&a], cfg.canvas, rng),
            random_offset(&[&b], cfg.canvas, rng),
        ) else {
            continue;
        };
        let (a, b) = (a.translated(oa.0, oa.1), b.translated(ob.0, ob.1));
        let rel = geometry::pair_relation(&a, &b, cfg.margins.guard_px);
        if !rel.disjoint {
            continue;
        }
        // object that gets the brighter color
        let bright = if cfg.task == Task::LeftRight {
            if rel.centroid_dx.abs() < dx_min {
                continue;
            }
            let left = if rel.centroid_dx < 0.0 { 0 } else { 1 };
            if label == 1 {
                left
            } else {
                1 - left
            }
        } else {
            let (aa, ab) = (
                geometry::area(&a).map_err(|e| e.to_string())?,
                geometry::area(&b).map_err(|e| e.to_string())?,
            );
            if aa.max(ab) < cfg.margins.area_ratio_min * aa.min(ab) {
                continue;
            }
            let larger = if aa > ab { 0 } else { 1 };
            if label == 1 {
                larger
            } else {
                1 - larger
            }
        };
        let (bg, hi, lo) = pair_colors(cfg.color_mode, rng);
        return Ok((bg, colored([a, b], [0, 1], bright, hi, lo)));
    }
    Err(format!("no valid disjoint placement in {} tries", cfg.max_tries))
}

fn overlapping_pair(
    cfg: &TaskConfig,
    sizes: &SizeRanges,
    split: Split,
    label: u8,
    rng: &mut Rng,
) -> Result<(Color, Vec<SceneObject>), String> {
    let pool = shape_pool(cfg.policy, split);
    let params = cfg.shape_params();
    let (ov_lo, ov_hi) = cfg.margins.overlap_range;
    for _ in 0..cfg.max_tries {
        let a = pooled_shape(&pool, sizes, &params, rng)?;
        let b = pooled_shape(&pool, sizes, &params, rng)?;
        let reach = a.size_param() + b.size_param();
        let d = Point::polar(rng.uniform(0.0, reach), rng.uniform(0.0, 2.0 * PI));
        let b = b.translated(d.x, d.y);
        let Some((ox, oy)) = random_offset(&[&a, &b], cfg.canvas, rng) else {
            continue;
        };
        let (a, b) = (a.translated(ox, oy), b.translated(ox, oy));
        let (ca, cb) = (Coverage::of_shape(&a), Coverage::of_shape(&b));
        let inter = ca.intersection_count(&cb);
        let overlap = inter as f64 / ca.count().min(cb.count()).max(1) as f64;
        if !(ov_lo..=ov_hi).contains(&overlap) {
            continue;
        }
        let back = rng.below(2) as usize;
        let back_count = if back == 0 { ca.count() } else { cb.count() };
        let visible = (back_count - inter) as f64 / back_count as f64;
        if visible < cfg.margins.visibility_min {
            continue;
        }
        let z = if back == 0 { [0, 1] } else { [1, 0] };
        let front = 1 - back;
        let bright = if label == 1 { front } else { back };
        let (bg, hi, lo) = pair_colors(cfg.color_mode, rng);
        return Ok((bg, colored([a, b], z, bright, hi, lo)));
    }
    Err(format!("no valid overlapping placement in {} tries", cfg.max_tries))
}

fn single(cfg: &TaskConfig, sizes: &SizeRanges, label: u8, rng: &mut Rng) -> Result<(Color, Vec<SceneObject>), String> {
    let mut params = cfg.shape_params();
    let (kind, sides) = match cfg.task {
        Task::Convexity => {
            params.convex_max_angle = Some(cfg.margins.convex_max_angle_deg.to_radians());
            let n = 4 + rng.below(3) as usize;
            let kind = if label == 1 {
                ShapeKind::IrregularConvexPolygon
            } else {
                ShapeKind::NonConvexPolygon
            };
            (kind, n)
        }
        _ => (ShapeKind::Polyline, if label == 1 { 2 } else { 3 }),
    };
    for _ in 0..cfg.max_tries {
        let spec = ShapeSpec {
            kind,
            sides,
            size: sizes.sample(rng),
            rotation: rng.uniform(0.0, 2.0 * PI),
            center: Point::default(),
        };
        let shape = geometry::gen_shape(&spec, &params, rng).map_err(|e| e.to_string())?;
        let Some((ox, oy)) = random_offset(&[&shape], cfg.canvas, rng) else {
            continue;
        };
        let shape = shape.translated(ox, oy);
        let (bg, fg) = match cfg.color_mode {
            ColorMode::TwoColor => (Color::Black, Color::White),
            ColorMode::ThreeColor => {
                let mut all = Color::ALL;
                rng.shuffle(&mut all);
                (all[0], all[1])
            }
        };
        return Ok((
            bg,
            vec![SceneObject {
                shape,
                color: fg,
                z: 0,
            }],
        ));
    }
    Err(format!("{} does not fit the canvas in {} tries", kind.as_str(), cfg.max_tries))
}
