//! Dataset families: scene generators, labeling rules, split policies and
//! on-disk manifests.
//!
//! Two-object tasks (left/right, front/back, size) label the relation of the
//! brighter object to the darker one. Single-object tasks (convexity,
//! straightness) label the object itself.

mod generate;
mod manifest;
mod splits;

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use generate::{gen_convexity, gen_front_back, gen_left_right, gen_size, gen_straightness, generate, generate_scene};
pub use manifest::{
    read_image, render_entry, write_dataset, Colors, DatasetManifest, ManifestEntry, OneOrPair, MANIFEST_FILE,
};
pub use splits::{make_size_splits, Interval, SizeRanges, SizeSplits, SplitPolicy};

use crate::geometry::{self, GeometryError, ShapeParams};
use crate::imageio::{ImageFormat, ImageIoError};
use crate::raster::{RenderError, Scene};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Task {
    LeftRight,
    FrontBack,
    Size,
    Convexity,
    Straightness,
}

impl Task {
    pub const ALL: [Task; 5] = [
        Task::LeftRight,
        Task::FrontBack,
        Task::Size,
        Task::Convexity,
        Task::Straightness,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::LeftRight => "left_right",
            Task::FrontBack => "front_back",
            Task::Size => "size",
            Task::Convexity => "convexity",
            Task::Straightness => "straightness",
        }
    }

    pub fn object_count(self) -> usize {
        match self {
            Task::LeftRight | Task::FrontBack | Task::Size => 2,
            Task::Convexity | Task::Straightness => 1,
        }
    }

    /// What label `1` means.
    pub fn label_meaning(self) -> &'static str {
        match self {
            Task::LeftRight => "1 = brighter object left of darker object",
            Task::FrontBack => "1 = brighter object in front of darker object",
            Task::Size => "1 = brighter object larger in area than darker object",
            Task::Convexity => "1 = convex, 0 = concave",
            Task::Straightness => "1 = straight, 0 = broken",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Palette usage.
///
/// Two-object tasks: `TwoColor` keeps a black background with grey and white
/// objects; `ThreeColor` assigns the whole palette to background and objects
/// at random. Single-object tasks: `TwoColor` is white on black;
/// `ThreeColor` draws a random distinct (object, background) pair.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ColorMode {
    #[default]
    TwoColor,
    ThreeColor,
}

impl ColorMode {
    pub const ALL: [ColorMode; 2] = [ColorMode::TwoColor, ColorMode::ThreeColor];

    pub fn as_str(self) -> &'static str {
        match self {
            ColorMode::TwoColor => "two_color",
            ColorMode::ThreeColor => "three_color",
        }
    }
}

impl fmt::Display for ColorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    fn stream(self) -> u64 {
        match self {
            Split::Train => 0,
            Split::Test => 1,
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Rejection margins. Angles in degrees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    /// Minimum |centroid dx| for left/right; `None` means 10% of the width.
    pub centroid_dx_min: Option<f64>,
    /// Minimum larger/smaller area ratio for the size task.
    pub area_ratio_min: f64,
    /// Bounds on the front/back overlap as a fraction of the smaller object.
    pub overlap_range: (f64, f64),
    /// Smallest visible share of the occluded object's pixels.
    pub visibility_min: f64,
    pub reflex_min_deg: f64,
    /// Cap on every interior angle of convexity-task convex polygons.
    pub convex_max_angle_deg: f64,
    pub turn_angle_range_deg: (f64, f64),
    /// Pixel gap required between objects that must be disjoint.
    pub guard_px: f64,
}

impl Default for Margins {
    fn default() -> Self {
        Margins {
            centroid_dx_min: None,
            area_ratio_min: 1.2,
            overlap_range: (0.1, 0.6),
            visibility_min: 0.25,
            reflex_min_deg: 210.0,
            convex_max_angle_deg: 150.0,
            turn_angle_range_deg: (20.0, 160.0),
            guard_px: 3.0,
        }
    }
}

/// Everything that determines a generated dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskConfig {
    pub task: Task,
    pub color_mode: ColorMode,
    /// Items per label in the train split.
    pub count_per_class: usize,
    /// Items per label in the test split.
    pub test_count_per_class: usize,
    pub canvas: (u32, u32),
    /// Base size range: circumradius for area shapes, length for polylines.
    pub size_range: (f64, f64),
    pub policy: SplitPolicy,
    pub seed: u64,
    pub margins: Margins,
    pub stroke_width: f64,
    /// Rejection budget for placing a scene.
    pub max_tries: usize,
    pub image_format: ImageFormat,
}

pub const DEFAULT_TEST_COUNT_PER_CLASS: usize = 1000;

impl TaskConfig {
    /// Defaults with the training count of the task's reference dataset.
    pub fn new(task: Task, seed: u64) -> Self {
        let count_per_class = match task {
            Task::LeftRight | Task::Size | Task::Straightness => 1200,
            Task::FrontBack => 4800,
            Task::Convexity => 3000,
        };
        TaskConfig {
            task,
            color_mode: ColorMode::TwoColor,
            count_per_class,
            test_count_per_class: DEFAULT_TEST_COUNT_PER_CLASS,
            canvas: (224, 224),
            size_range: (20.0, 50.0),
            policy: SplitPolicy::Iid,
            seed,
            margins: Margins::default(),
            stroke_width: 3.0,
            max_tries: 1000,
            image_format: ImageFormat::Pgm,
        }
    }

    pub fn count(&self, split: Split) -> usize {
        match split {
            Split::Train => self.count_per_class,
            Split::Test => self.test_count_per_class,
        }
    }

    pub fn centroid_dx_min(&self) -> f64 {
        self.margins
            .centroid_dx_min
            .unwrap_or(0.1 * self.canvas.0 as f64)
    }

    pub fn shape_params(&self) -> ShapeParams {
        let m = &self.margins;
        ShapeParams {
            reflex_min: m.reflex_min_deg.to_radians(),
            turn_angle_range: (
                m.turn_angle_range_deg.0.to_radians(),
                m.turn_angle_range_deg.1.to_radians(),
            ),
            stroke_width: self.stroke_width,
            ..ShapeParams::default()
        }
    }

    pub fn validate(&self) -> Result<(), TaskError> {
        let bad = |msg: String| Err(TaskError::InvalidConfig(msg));
        let m = &self.margins;
        if self.count_per_class == 0 {
            return bad("count_per_class must be at least 1".into());
        }
        let (lo, hi) = self.size_range;
        if !(lo > 0.0 && lo < hi) {
            return bad(format!("size range needs 0 < lo < hi, got [{lo}, {hi}]"));
        }
        let (a, b) = m.overlap_range;
        if !(0.0 < a && a <= b && b < 1.0) {
            return bad(format!("overlap range must lie inside (0, 1), got [{a}, {b}]"));
        }
        if !(0.0..1.0).contains(&m.visibility_min) {
            return bad(format!("visibility_min must be in [0, 1), got {}", m.visibility_min));
        }
        if !(m.area_ratio_min >= 1.0) {
            return bad(format!("area_ratio_min must be >= 1, got {}", m.area_ratio_min));
        }
        if !(180.0 < m.reflex_min_deg && m.reflex_min_deg < 360.0) {
            return bad(format!("reflex_min must be in (180, 360), got {}", m.reflex_min_deg));
        }
        let (t0, t1) = m.turn_angle_range_deg;
        if !(0.0 < t0 && t0 <= t1 && t1 < 180.0) {
            return bad(format!("turn angle range must lie in (0, 180), got [{t0}, {t1}]"));
        }
        if !(self.stroke_width > 0.0) {
            return bad(format!("stroke width must be positive, got {}", self.stroke_width));
        }
        if self.canvas.0 < 16 || self.canvas.1 < 16 {
            return bad(format!("canvas {}x{} is too small", self.canvas.0, self.canvas.1));
        }
        if self.policy.is_shape_shift() && self.task.object_count() == 1 {
            return bad(format!("policy {} applies to two-object tasks only", self.policy));
        }
        make_size_splits(self.size_range, self.policy)?;
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("{split} item {index}: {reason}")]
    Generation { split: Split, index: usize, reason: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Image(#[from] ImageIoError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0} is not empty; pass force to overwrite")]
    OutputNotEmpty(PathBuf),
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// Label recomputed from a scene's vector geometry alone.
pub fn oracle_label(scene: &Scene) -> Result<u8, TaskError> {
    let want = scene.task.object_count();
    if scene.objects.len() != want {
        return Err(TaskError::InvalidConfig(format!(
            "{} scene needs {want} objects, has {}",
            scene.task,
            scene.objects.len()
        )));
    }
    let yes = |b: bool| Ok(b as u8);
    match scene.task {
        Task::LeftRight | Task::FrontBack | Task::Size => {
            let (a, b) = (&scene.objects[0], &scene.objects[1]);
            if a.color == b.color {
                return Err(TaskError::InvalidConfig("both objects share a color".into()));
            }
            let (hi, lo) = if a.color.level() > b.color.level() { (a, b) } else { (b, a) };
            match scene.task {
                Task::LeftRight => yes(geometry::centroid(&hi.shape).x < geometry::centroid(&lo.shape).x),
                Task::FrontBack => yes(hi.z > lo.z),
                _ => yes(geometry::area(&hi.shape)? > geometry::area(&lo.shape)?),
            }
        }
        Task::Convexity => {
            let poly = scene.objects[0]
                .shape
                .polygon()
                .ok_or_else(|| TaskError::InvalidConfig("convexity object is not a polygon".into()))?;
            yes(geometry::is_convex(poly)?)
        }
        Task::Straightness => match &scene.objects[0].shape {
            geometry::Shape::Polyline { points, .. } => yes(geometry::straightness_oracle(points)?),
            _ => Err(TaskError::InvalidConfig("straightness object is not a polyline".into())),
        },
    }
}

/// Worker count from `SPATIAL_BENCH_THREADS`; `0` or unset means automatic.
pub fn threads_from_env() -> usize {
    std::env::var("SPATIAL_BENCH_THREADS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}

pub(crate) fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, TaskError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| TaskError::ThreadPool(e.to_string()))?;
    Ok(pool.install(f))
}
