//! Command-line front end: `generate`, `classify`, `calibrate`, `evaluate`
//! and `inspect`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or I/O error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::eval::{self, EvalReport, PredictionSet, ReportFormat};
use crate::imageio::ImageFormat;
use crate::kernelnet::{self, ConvexityNet, KernelBank};
use crate::tasks::{self, ColorMode, DatasetManifest, ManifestEntry, Margins, Split, SplitPolicy, Task, TaskConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "spatial-bench", version, about = "Spatial-cognition image benchmarks and hand-crafted classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a dataset tree (images/ and manifest.jsonl).
    Generate(GenerateArgs),
    /// Run a hand-crafted net over a dataset and write predictions as CSV.
    Classify(ClassifyArgs),
    /// Tune the straightness bank threshold against oracle labels.
    Calibrate(CalibrateArgs),
    /// Score prediction files against a manifest.
    Evaluate(EvaluateArgs),
    /// Print one manifest item with its recomputed label.
    Inspect(InspectArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    task: Task,
    #[arg(long, value_enum, default_value_t = ColorMode::TwoColor)]
    color_mode: ColorMode,
    /// Train items per label; defaults to the task's reference count.
    #[arg(long)]
    count_per_class: Option<usize>,
    #[arg(long, default_value_t = tasks::DEFAULT_TEST_COUNT_PER_CLASS)]
    test_count_per_class: usize,
    /// Canvas as WIDTHxHEIGHT.
    #[arg(long, default_value = "224x224", value_parser = parse_canvas)]
    canvas: (u32, u32),
    #[arg(long, default_value_t = 20.0)]
    size_min: f64,
    #[arg(long, default_value_t = 50.0)]
    size_max: f64,
    #[arg(long, value_enum, default_value_t = SplitPolicy::Iid)]
    policy: SplitPolicy,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = ImageFormat::Pgm)]
    format: ImageFormat,
    /// Replace an existing dataset in --out.
    #[arg(long)]
    force: bool,
    /// Minimum |centroid dx| in px for left/right (default: 10% of the width).
    #[arg(long)]
    centroid_dx_min: Option<f64>,
    #[arg(long, default_value_t = 1.2)]
    area_ratio_min: f64,
    #[arg(long, default_value_t = 0.1)]
    overlap_min: f64,
    #[arg(long, default_value_t = 0.6)]
    overlap_max: f64,
    #[arg(long, default_value_t = 0.25)]
    visibility_min: f64,
    /// Degrees.
    #[arg(long, default_value_t = 210.0)]
    reflex_min: f64,
    /// Degrees.
    #[arg(long, default_value_t = 150.0)]
    convex_max_angle: f64,
    /// Degrees.
    #[arg(long, default_value_t = 20.0)]
    turn_angle_min: f64,
    /// Degrees.
    #[arg(long, default_value_t = 160.0)]
    turn_angle_max: f64,
    #[arg(long, default_value_t = 3.0)]
    guard_px: f64,
    #[arg(long, default_value_t = 3.0)]
    stroke_width: f64,
    #[arg(long, default_value_t = 1000)]
    max_tries: usize,
}

impl GenerateArgs {
    fn config(&self) -> TaskConfig {
        let mut c = TaskConfig::new(self.task, self.seed);
        if let Some(n) = self.count_per_class {
            c.count_per_class = n;
        }
        c.color_mode = self.color_mode;
        c.test_count_per_class = self.test_count_per_class;
        c.canvas = self.canvas;
        c.size_range = (self.size_min, self.size_max);
        c.policy = self.policy;
        c.margins = Margins {
            centroid_dx_min: self.centroid_dx_min,
            area_ratio_min: self.area_ratio_min,
            overlap_range: (self.overlap_min, self.overlap_max),
            visibility_min: self.visibility_min,
            reflex_min_deg: self.reflex_min,
            convex_max_angle_deg: self.convex_max_angle,
            turn_angle_range_deg: (self.turn_angle_min, self.turn_angle_max),
            guard_px: self.guard_px,
        };
        c.stroke_width = self.stroke_width;
        c.max_tries = self.max_tries;
        c.image_format = self.format;
        c
    }
}

fn parse_canvas(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or("expected WIDTHxHEIGHT")?;
    let n = |v: &str| v.trim().parse::<u32>().map_err(|e| format!("{v}: {e}"));
    Ok((n(w)?, n(h)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Net {
    Straightness,
    Convexity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SplitArg {
    Train,
    Test,
    All,
}

impl SplitArg {
    fn keeps(self, s: Split) -> bool {
        match self {
            SplitArg::Train => s == Split::Train,
            SplitArg::Test => s == Split::Test,
            SplitArg::All => true,
        }
    }
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    #[arg(long, value_enum)]
    net: Net,
    /// Dataset directory holding manifest.jsonl.
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    split: SplitArg,
    /// Kernel bank file for the straightness net (default: built-in bank).
    #[arg(long)]
    bank: Option<PathBuf>,
    #[arg(long, default_value_t = ConvexityNet::default().radius)]
    radius: f64,
    /// 0 disables edge-offset compensation.
    #[arg(long, default_value_t = ConvexityNet::default().inner_radius)]
    inner_radius: f64,
    #[arg(long, default_value_t = ConvexityNet::default().delta)]
    delta: f64,
    /// Output CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitArg::Train)]
    split: SplitArg,
    /// Starting bank (default: built-in bank).
    #[arg(long)]
    bank: Option<PathBuf>,
    /// Where to write the tuned bank (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Prediction CSV as PATH or NAME=PATH; repeatable.
    #[arg(long = "predictions", required = true)]
    predictions: Vec<String>,
    /// Earlier report CSVs to fold into this one; repeatable.
    #[arg(long)]
    merge: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Markdown)]
    format: ReportFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct InspectArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    id: String,
}

type DataResult<T> = Result<T, String>;

/// Parse `argv` (including the program name) and run.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_cli_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run_cli`] with explicit output streams.
pub fn run_cli_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let threads = tasks::threads_from_env();
    let result = match cli.command {
        Command::Generate(a) => {
            let cfg = a.config();
            if let Err(e) = cfg.validate() {
                let _ = writeln!(err, "error: {e}");
                return EXIT_USAGE;
            }
            generate(&cfg, &a.out, a.force, threads, out)
        }
        Command::Classify(a) => classify(&a, threads, out),
        Command::Calibrate(a) => calibrate(&a, threads, out, err),
        Command::Evaluate(a) => evaluate(&a, out),
        Command::Inspect(a) => inspect(&a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_DATA
        }
    }
}

fn generate(cfg: &TaskConfig, dir: &Path, force: bool, threads: usize, out: &mut dyn Write) -> DataResult<()> {
    let m = tasks::generate(cfg, threads).map_err(|e| e.to_string())?;
    tasks::write_dataset(&m, dir, force, threads).map_err(|e| e.to_string())?;
    let cfg_path = dir.join("config.json");
    let json = serde_json::to_string_pretty(cfg).map_err(|e| e.to_string())?;
    std::fs::write(&cfg_path, json + "\n").map_err(|e| format!("{}: {e}", cfg_path.display()))?;
    writeln!(
        out,
        "wrote {} images ({} train, {} test) to {}",
        m.entries.len(),
        m.split(Split::Train).count(),
        m.split(Split::Test).count(),
        dir.display()
    )
    .map_err(|e| e.to_string())
}

fn load_bank(path: Option<&Path>) -> DataResult<KernelBank> {
    match path {
        None => Ok(kernelnet::corner_bank()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            KernelBank::from_text(&text).map_err(|e| format!("{}: {e}", p.display()))
        }
    }
}

fn load_manifest(dir: &Path) -> DataResult<DatasetManifest> {
    DatasetManifest::read(dir).map_err(|e| e.to_string())
}

fn dataset_dir(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.to_path_buf()
    } else {
        p.parent().map(Path::to_path_buf).unwrap_or_default()
    }
}

fn write_output(path: Option<&Path>, text: &str, out: &mut dyn Write) -> DataResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => out.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    }
}

/// Apply `f` to every selected image, in manifest order.
fn map_images<T: Send>(
    dir: &Path,
    entries: &[&ManifestEntry],
    threads: usize,
    f: impl Fn(&crate::raster::GrayImage) -> Result<T, kernelnet::KernelError> + Sync,
) -> DataResult<Vec<T>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| e.to_string())?;
    pool.install(|| {
        entries
            .par_iter()
            .map(|e| {
                let img = tasks::read_image(dir, e).map_err(|err| format!("{}: {err}", e.id))?;
                f(&img).map_err(|err| format!("{}: {err}", e.id))
            })
            .collect()
    })
}

fn classify(a: &ClassifyArgs, threads: usize, out: &mut dyn Write) -> DataResult<()> {
    let m = load_manifest(&a.manifest)?;
    let dir = dataset_dir(&a.manifest);
    let entries: Vec<&ManifestEntry> = m.entries.iter().filter(|e| a.split.keeps(e.split)).collect();
    let labels = match a.net {
        Net::Straightness => {
            let bank = load_bank(a.bank.as_deref())?;
            map_images(&dir, &entries, threads, |img| kernelnet::classify_straightness(img, &bank))?
        }
        Net::Convexity => {
            let net = ConvexityNet {
                radius: a.radius,
                inner_radius: a.inner_radius,
                delta: a.delta,
            };
            map_images(&dir, &entries, threads, |img| net.classify(img))?
        }
    };
    let preds = PredictionSet {
        classifier: format!("{:?}", a.net).to_lowercase(),
        entries: entries.iter().map(|e| e.id.clone()).zip(labels).collect(),
    };
    write_output(a.out.as_deref(), &preds.to_csv(), out)
}

fn calibrate(a: &CalibrateArgs, threads: usize, out: &mut dyn Write, err: &mut dyn Write) -> DataResult<()> {
    let m = load_manifest(&a.manifest)?;
    let dir = dataset_dir(&a.manifest);
    let bank = load_bank(a.bank.as_deref())?;
    let entries: Vec<&ManifestEntry> = m
        .entries
        .iter()
        .filter(|e| a.split.keeps(e.split) && e.task == Task::Straightness)
        .collect();
    if entries.is_empty() {
        return Err("no straightness items in the selected split".into());
    }
    let maxima = map_images(&dir, &entries, threads, |img| kernelnet::straightness_response(img, &bank))?;
    let samples: Vec<(u8, u8)> = maxima.into_iter().zip(entries.iter().map(|e| e.label)).collect();
    let cal = kernelnet::calibrate_threshold(&samples);
    let tuned = bank.with_threshold(cal.threshold).map_err(|e| e.to_string())?;
    let _ = writeln!(
        err,
        "threshold {} classifies {}/{} calibration items correctly",
        cal.threshold, cal.correct, cal.total
    );
    write_output(a.out.as_deref(), &tuned.to_text(), out)
}

fn evaluate(a: &EvaluateArgs, out: &mut dyn Write) -> DataResult<()> {
    let m = load_manifest(&a.manifest)?;
    let mut report = EvalReport::default();
    for p in &a.merge {
        let file = std::fs::File::open(p).map_err(|e| format!("{}: {e}", p.display()))?;
        report.merge(&eval::parse_report_csv(file).map_err(|e| format!("{}: {e}", p.display()))?);
    }
    for arg in &a.predictions {
        let (name, path) = match arg.split_once('=') {
            Some((n, p)) => (Some(n), PathBuf::from(p)),
            None => (None, PathBuf::from(arg)),
        };
        let preds = PredictionSet::read(&path, name).map_err(|e| e.to_string())?;
        let r = eval::score(&m, &preds).map_err(|e| format!("{}: {e}", path.display()))?;
        report.merge(&r);
    }
    write_output(a.out.as_deref(), &eval::render_report(&report, a.format), out)
}

fn inspect(a: &InspectArgs, out: &mut dyn Write) -> DataResult<()> {
    let m = load_manifest(&a.manifest)?;
    let e = m.get(&a.id).ok_or_else(|| format!("no item {}", a.id))?;
    let oracle = tasks::oracle_label(&e.scene).map_err(|err| err.to_string())?;
    let dir = dataset_dir(&a.manifest);
    let on_disk = match tasks::read_image(&dir, e) {
        Ok(img) => {
            if tasks::render_entry(e).map_err(|err| err.to_string())? == img {
                "matches the regenerated raster"
            } else {
                "DIFFERS from the regenerated raster"
            }
        }
        Err(_) => "missing or unreadable",
    };
    let mut s = String::new();
    s.push_str(&format!("id:          {}\n", e.id));
    s.push_str(&format!("task:        {} ({})\n", e.task, e.label_meaning));
    s.push_str(&format!("label:       {} (oracle {oracle})\n", e.label));
    s.push_str(&format!("split:       {} / {} / {}\n", e.split, e.policy, e.color_mode));
    s.push_str(&format!("seed:        {}\n", e.seed));
    s.push_str(&format!("image:       {} ({on_disk})\n", e.path));
    s.push_str(&format!("background:  {}\n", e.scene.background.as_str()));
    for (i, o) in e.scene.objects.iter().enumerate() {
        s.push_str(&format!(
            "object {i}:    {} {} z={} size={:.3}\n",
            o.color.as_str(),
            o.shape.kind().as_str(),
            o.z,
            o.shape.size_param()
        ));
        let pts: Vec<String> = match &o.shape {
            crate::geometry::Shape::Circle { center, radius } => {
                vec![format!("center ({:.3}, {:.3}) radius {radius:.3}", center.x, center.y)]
            }
            crate::geometry::Shape::Polyline { points, stroke_width } => {
                let mut v: Vec<String> = points.iter().map(|p| format!("({:.3}, {:.3})", p.x, p.y)).collect();
                v.push(format!("stroke {stroke_width}"));
                v
            }
            other => other
                .polygon()
                .unwrap_or_default()
                .iter()
                .map(|p| format!("({:.3}, {:.3})", p.x, p.y))
                .collect(),
        };
        s.push_str(&format!("             {}\n", pts.join(" ")));
    }
    out.write_all(s.as_bytes()).map_err(|e| e.to_string())
}
