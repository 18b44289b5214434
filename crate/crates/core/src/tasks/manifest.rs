use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{with_pool, ColorMode, Split, SplitPolicy, Task, TaskConfig, TaskError};
use crate::geometry::ShapeKind;
use crate::imageio::{self, ImageFormat};
use crate::raster::{rasterize_scene, Color, GrayImage, Scene};

pub const MANIFEST_FILE: &str = "manifest.jsonl";

/// A scalar for one-object scenes, a pair in object order for two.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrPair<T> {
    One(T),
    Pair([T; 2]),
}

impl<T: Copy> OneOrPair<T> {
    fn of(items: &[T]) -> Self {
        match items {
            [a, b] => OneOrPair::Pair([*a, *b]),
            _ => OneOrPair::One(items[0]),
        }
    }

    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrPair::One(a) => vec![*a],
            OneOrPair::Pair(p) => p.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Colors {
    pub background: Color,
    /// In object order.
    pub objects: Vec<Color>,
}

/// One line of `manifest.jsonl`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    /// Image path relative to the dataset directory.
    pub path: String,
    pub label: u8,
    pub split: Split,
    pub task: Task,
    pub color_mode: ColorMode,
    pub policy: SplitPolicy,
    pub size_param: OneOrPair<f64>,
    pub shape_kind: OneOrPair<ShapeKind>,
    /// Per-item seed, 16 hex digits.
    pub seed: String,
    pub colors: Colors,
    pub label_meaning: String,
    pub canvas: [u32; 2],
    pub scene: Scene,
}

impl ManifestEntry {
    pub fn from_scene(cfg: &TaskConfig, split: Split, index: usize, scene: Scene) -> ManifestEntry {
        let id = format!("{}_{}_{:06}", cfg.task, split, index);
        let sizes: Vec<f64> = scene.objects.iter().map(|o| o.shape.size_param()).collect();
        let kinds: Vec<ShapeKind> = scene.objects.iter().map(|o| o.shape.kind()).collect();
        ManifestEntry {
            path: format!("images/{id}.{}", cfg.image_format.extension()),
            id,
            label: scene.label,
            split,
            task: cfg.task,
            color_mode: cfg.color_mode,
            policy: cfg.policy,
            size_param: OneOrPair::of(&sizes),
            shape_kind: OneOrPair::of(&kinds),
            seed: format!("{:016x}", scene.seed),
            colors: Colors {
                background: scene.background,
                objects: scene.objects.iter().map(|o| o.color).collect(),
            },
            label_meaning: cfg.task.label_meaning().to_string(),
            canvas: [cfg.canvas.0, cfg.canvas.1],
            scene,
        }
    }
}

/// Ordered list of items: train split first, each split by index.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn to_jsonl(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            s.push_str(&serde_json::to_string(e).expect("manifest entries serialize"));
            s.push('\n');
        }
        s
    }

    pub fn from_jsonl(text: &str) -> Result<DatasetManifest, TaskError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let e: ManifestEntry = serde_json::from_str(line).map_err(|err| TaskError::Manifest {
                line: i + 1,
                message: err.to_string(),
            })?;
            entries.push(e);
        }
        let m = DatasetManifest { entries };
        m.check()?;
        Ok(m)
    }

    /// Read `manifest.jsonl` from a dataset directory or a direct file path.
    pub fn read(path: &Path) -> Result<DatasetManifest, TaskError> {
        let file = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
        let text = fs::read_to_string(&file).map_err(|source| TaskError::Io { path: file, source })?;
        DatasetManifest::from_jsonl(&text)
    }

    /// Unique ids and binary labels.
    pub fn check(&self) -> Result<(), TaskError> {
        let mut seen = std::collections::HashSet::new();
        for (i, e) in self.entries.iter().enumerate() {
            let bad = |message: String| Err(TaskError::Manifest { line: i + 1, message });
            if !seen.insert(e.id.as_str()) {
                return bad(format!("duplicate id {}", e.id));
            }
            if e.label > 1 {
                return bad(format!("label {} is not 0 or 1", e.label));
            }
        }
        Ok(())
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn count(&self, split: Split, label: u8) -> usize {
        self.split(split).filter(|e| e.label == label).count()
    }

    pub fn get(&self, id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.id == id)
    }
}

/// Rasterize an entry's stored scene.
pub fn render_entry(e: &ManifestEntry) -> Result<GrayImage, TaskError> {
    Ok(rasterize_scene(&e.scene, e.canvas[0], e.canvas[1])?)
}

/// Load an entry's image file from the dataset directory.
pub fn read_image(dir: &Path, e: &ManifestEntry) -> Result<GrayImage, TaskError> {
    Ok(imageio::load(&dir.join(&e.path))?)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TaskError + '_ {
    move |source| TaskError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Write `images/` and `manifest.jsonl` under `out_dir`.
///
/// A non-empty `out_dir` is refused unless `force`, in which case the
/// previous `images/` tree and manifest are removed first.
pub fn write_dataset(m: &DatasetManifest, out_dir: &Path, force: bool, threads: usize) -> Result<(), TaskError> {
    if out_dir.exists() {
        let mut listing = fs::read_dir(out_dir).map_err(io_err(out_dir))?;
        if listing.next().is_some() {
            if !force {
                return Err(TaskError::OutputNotEmpty(out_dir.to_path_buf()));
            }
            let images = out_dir.join("images");
            if images.exists() {
                fs::remove_dir_all(&images).map_err(io_err(&images))?;
            }
            let mf = out_dir.join(MANIFEST_FILE);
            if mf.exists() {
                fs::remove_file(&mf).map_err(io_err(&mf))?;
            }
        }
    }
    let images = out_dir.join("images");
    fs::create_dir_all(&images).map_err(io_err(&images))?;
    with_pool(threads, || {
        m.entries.par_iter().try_for_each(|e| {
            let img = render_entry(e)?;
            let path = out_dir.join(&e.path);
            let format = ImageFormat::from_path(&path).unwrap_or_default();
            let bytes = imageio::encode(&img, format)?;
            fs::write(&path, bytes).map_err(io_err(&path))
        })
    })??;
    let mf = out_dir.join(MANIFEST_FILE);
    let file = fs::File::create(&mf).map_err(io_err(&mf))?;
    let mut w = BufWriter::new(file);
    w.write_all(m.to_jsonl().as_bytes()).map_err(io_err(&mf))?;
    w.flush().map_err(io_err(&mf))?;
    Ok(())
}
