//! Hand-crafted convolutional classifiers.
//!
//! Straightness: binarize, correlate with a bank of twelve 3×3 binary
//! templates, take the pixelwise maximum of the twelve response maps, then
//! a shifted ReLU on the global maximum decides. Convexity: the normalized
//! disk convolution estimates the interior angle at every boundary pixel and
//! a threshold flags reflex vertices.

use std::fmt;

use thiserror::Error;

use crate::raster::GrayImage;

pub const STRAIGHT: u8 = 1;
pub const BROKEN: u8 = 0;
pub const CONVEX: u8 = 1;
pub const CONCAVE: u8 = 0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("border ring has no majority level ({0} and {1} tie)")]
    BorderTie(u8, u8),
    #[error("image has no foreground object")]
    NoObject,
    #[error("feature map dimensions differ: {0:?} vs {1:?}")]
    DimensionMismatch((u32, u32), (u32, u32)),
    #[error("no feature maps to merge")]
    NothingToMerge,
    #[error("invalid template: {0}")]
    InvalidTemplate(String),
    #[error("invalid kernel bank: {0}")]
    InvalidBank(String),
    #[error("image must be at least 3x3, got {0}x{1}")]
    TooSmall(u32, u32),
}

/// Foreground mask of an image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMap {
    pub width: u32,
    pub height: u32,
    pub bits: Vec<bool>,
}

impl BinaryMap {
    pub fn new(width: u32, height: u32) -> Self {
        BinaryMap {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    /// Out-of-bounds reads are background.
    pub fn get(&self, x: i64, y: i64) -> bool {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return false;
        }
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        let w = self.width as usize;
        self.bits[y as usize * w + x as usize] = v;
    }

    pub fn foreground_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Parse rows of `#`/`1` (foreground) and `.`/`0` (background).
    pub fn from_ascii(rows: &[&str]) -> Self {
        let height = rows.len() as u32;
        let width = rows.first().map_or(0, |r| r.len()) as u32;
        let mut m = BinaryMap::new(width, height);
        for (y, row) in rows.iter().enumerate() {
            for (x, c) in row.chars().enumerate() {
                m.set(x as u32, y as u32, c == '#' || c == '1');
            }
        }
        m
    }
}

/// Background is the majority level of the 1-px border ring; every other
/// pixel is foreground.
pub fn binarize(img: &GrayImage) -> Result<BinaryMap, KernelError> {
    let (w, h) = (img.width, img.height);
    let mut counts = [0usize; 256];
    for x in 0..w {
        counts[img.get(x, 0) as usize] += 1;
        if h > 1 {
            counts[img.get(x, h - 1) as usize] += 1;
        }
    }
    for y in 1..h.saturating_sub(1) {
        counts[img.get(0, y) as usize] += 1;
        if w > 1 {
            counts[img.get(w - 1, y) as usize] += 1;
        }
    }
    let mut best = 0usize;
    for (level, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = level;
        }
    }
    if let Some(other) = (0..256).find(|&l| l != best && counts[l] == counts[best]) {
        return Err(KernelError::BorderTie(best.min(other) as u8, best.max(other) as u8));
    }
    let bg = best as u8;
    Ok(BinaryMap {
        width: w,
        height: h,
        bits: img.pixels.iter().map(|&p| p != bg).collect(),
    })
}

/// 3×3 binary template; `1` expects foreground, `0` expects background.
/// `cells[row][col]`, row 0 on top.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TemplateKernel {
    pub id: String,
    pub cells: [[u8; 3]; 3],
}

impl TemplateKernel {
    pub fn new(id: impl Into<String>, cells: [[u8; 3]; 3]) -> Result<Self, KernelError> {
        let flat = cells.iter().flatten();
        if flat.clone().any(|&c| c > 1) {
            return Err(KernelError::InvalidTemplate("cells must be 0 or 1".into()));
        }
        let ones = flat.filter(|&&c| c == 1).count();
        if ones == 0 || ones == 9 {
            return Err(KernelError::InvalidTemplate(
                "needs at least one foreground and one background cell".into(),
            ));
        }
        Ok(TemplateKernel {
            id: id.into(),
            cells,
        })
    }

    /// Bit `3 * row + col` is set for foreground cells.
    pub fn code(&self) -> u16 {
        let mut code = 0;
        for r in 0..3 {
            for c in 0..3 {
                if self.cells[r][c] == 1 {
                    code |= 1 << (3 * r + c);
                }
            }
        }
        code
    }

    pub fn ones(&self) -> u32 {
        self.code().count_ones()
    }

    /// Quarter turn clockwise.
    pub fn rotated(&self, id: impl Into<String>) -> TemplateKernel {
        let mut cells = [[0u8; 3]; 3];
        for (r, row) in cells.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = self.cells[2 - c][r];
            }
        }
        TemplateKernel {
            id: id.into(),
            cells,
        }
    }

    /// Left-right mirror.
    pub fn mirrored(&self, id: impl Into<String>) -> TemplateKernel {
        let mut cells = self.cells;
        for row in cells.iter_mut() {
            row.reverse();
        }
        TemplateKernel {
            id: id.into(),
            cells,
        }
    }
}

pub const BANK_SIZE: usize = 12;

/// Twelve templates and the match-score cutoff of the decision layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KernelBank {
    pub kernels: Vec<TemplateKernel>,
    pub decision_threshold: u8,
}

impl KernelBank {
    pub fn new(kernels: Vec<TemplateKernel>, decision_threshold: u8) -> Result<Self, KernelError> {
        if kernels.len() != BANK_SIZE {
            return Err(KernelError::InvalidBank(format!(
                "expected {BANK_SIZE} kernels, got {}",
                kernels.len()
            )));
        }
        if decision_threshold > 9 {
            return Err(KernelError::InvalidBank(format!(
                "threshold {decision_threshold} outside [0, 9]"
            )));
        }
        Ok(KernelBank {
            kernels,
            decision_threshold,
        })
    }

    pub fn parameter_count(&self) -> usize {
        self.kernels.len() * 9
    }

    pub fn with_threshold(&self, decision_threshold: u8) -> Result<Self, KernelError> {
        KernelBank::new(self.kernels.clone(), decision_threshold)
    }

    /// Plain-text form: per kernel an optional `# id` line then three lines
    /// of three `0`/`1` digits, blank-line separated, and a final
    /// `threshold <n>` line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for k in &self.kernels {
            s.push_str(&format!("# {}\n", k.id));
            for row in &k.cells {
                s.push_str(&format!("{}{}{}\n", row[0], row[1], row[2]));
            }
            s.push('\n');
        }
        s.push_str(&format!("threshold {}\n", self.decision_threshold));
        s
    }

    pub fn from_text(text: &str) -> Result<Self, KernelError> {
        let mut kernels = Vec::new();
        let mut threshold = None;
        let mut id: Option<String> = None;
        let mut rows: Vec<[u8; 3]> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let bad = |msg: &str| KernelError::InvalidBank(format!("line {}: {msg}", lineno + 1));
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                id = Some(rest.trim().to_string());
                continue;
            }
            if let Some(rest) = line.strip_prefix("threshold") {
                if threshold.is_some() {
                    return Err(bad("duplicate threshold line"));
                }
                threshold = Some(rest.trim().parse::<u8>().map_err(|_| bad("bad threshold"))?);
                continue;
            }
            if threshold.is_some() {
                return Err(bad("kernel rows after the threshold line"));
            }
            let digits: Vec<u8> = line
                .chars()
                .map(|c| match c {
                    '0' => Ok(0),
                    '1' => Ok(1),
                    _ => Err(bad("expected 0/1 digits")),
                })
                .collect::<Result<_, _>>()?;
            if digits.len() != 3 {
                return Err(bad("expected exactly 3 digits"));
            }
            rows.push([digits[0], digits[1], digits[2]]);
            if rows.len() == 3 {
                let label = id.take().unwrap_or_else(|| format!("k{}", kernels.len()));
                kernels.push(TemplateKernel::new(label, [rows[0], rows[1], rows[2]])?);
                rows.clear();
            }
        }
        if !rows.is_empty() {
            return Err(KernelError::InvalidBank("trailing partial kernel".into()));
        }
        let threshold = threshold.ok_or_else(|| KernelError::InvalidBank("missing threshold line".into()))?;
        KernelBank::new(kernels, threshold)
    }
}

/// The default bank, three seeds in four orientations each: the notch
/// (`101/111/111`), the inside corner (`111/100/100`) and the inside corner
/// with a filled far cell (`111/100/110`). In every template some background
/// cell is the midpoint of two foreground cells, so no digitized convex set
/// (such as a straight stroke) matches it exactly; the inner side of a
/// stroke bend does.
pub fn corner_bank() -> KernelBank {
    let seeds = [
        ("notch", [[1, 0, 1], [1, 1, 1], [1, 1, 1]]),
        ("corner", [[1, 1, 1], [1, 0, 0], [1, 0, 0]]),
        ("corner_fill", [[1, 1, 1], [1, 0, 0], [1, 1, 0]]),
    ];
    let mut kernels = Vec::with_capacity(BANK_SIZE);
    for (name, cells) in seeds {
        let mut k = TemplateKernel::new(format!("{name}_n"), cells).expect("valid template");
        for dir in ["e", "s", "w"] {
            let next = k.rotated(format!("{name}_{dir}"));
            kernels.push(std::mem::replace(&mut k, next));
        }
        kernels.push(k);
    }
    KernelBank::new(kernels, 9).expect("twelve kernels")
}

impl fmt::Display for KernelBank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Per-pixel integer match scores in `[0, 9]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureMap {
    pub width: u32,
    pub height: u32,
    pub scores: Vec<u8>,
}

impl FeatureMap {
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.scores[y as usize * self.width as usize + x as usize]
    }

    pub fn global_max(&self) -> u8 {
        self.scores.iter().copied().max().unwrap_or(0)
    }

    /// Pixel positions holding the global maximum.
    pub fn argmax(&self) -> Vec<(u32, u32)> {
        let m = self.global_max();
        self.scores
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == m)
            .map(|(i, _)| ((i % self.width as usize) as u32, (i / self.width as usize) as u32))
            .collect()
    }
}

/// 9-bit neighbourhood code of every pixel, same bit layout as
/// [`TemplateKernel::code`]. Out-of-bounds cells read as background.
pub fn neighborhood_codes(b: &BinaryMap) -> Vec<u16> {
    let (w, h) = (b.width as i64, b.height as i64);
    let mut out = vec![0u16; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let mut code = 0u16;
            for r in 0..3 {
                for c in 0..3 {
                    if b.get(x + c - 1, y + r - 1) {
                        code |= 1 << (3 * r + c);
                    }
                }
            }
            out[(y * w + x) as usize] = code;
        }
    }
    out
}

/// Number of window cells where the template's expectation matches.
pub fn template_match_map(b: &BinaryMap, k: &TemplateKernel) -> Result<FeatureMap, KernelError> {
    if b.width < 3 || b.height < 3 {
        return Err(KernelError::TooSmall(b.width, b.height));
    }
    let t = k.code();
    let scores = neighborhood_codes(b)
        .into_iter()
        .map(|code| 9 - ((code ^ t) & 0x1ff).count_ones() as u8)
        .collect();
    Ok(FeatureMap {
        width: b.width,
        height: b.height,
        scores,
    })
}

/// Pixelwise maximum.
pub fn max_merge(maps: &[FeatureMap]) -> Result<FeatureMap, KernelError> {
    let first = maps.first().ok_or(KernelError::NothingToMerge)?;
    let mut out = first.clone();
    for m in &maps[1..] {
        if (m.width, m.height) != (out.width, out.height) {
            return Err(KernelError::DimensionMismatch(
                (out.width, out.height),
                (m.width, m.height),
            ));
        }
        for (o, &s) in out.scores.iter_mut().zip(&m.scores) {
            *o = (*o).max(s);
        }
    }
    Ok(out)
}

/// The merged maximum response map of the whole bank, computed from one
/// pass of neighbourhood codes.
pub fn merged_response(b: &BinaryMap, bank: &KernelBank) -> Result<FeatureMap, KernelError> {
    if b.width < 3 || b.height < 3 {
        return Err(KernelError::TooSmall(b.width, b.height));
    }
    let codes: Vec<u16> = bank.kernels.iter().map(TemplateKernel::code).collect();
    let scores = neighborhood_codes(b)
        .into_iter()
        .map(|n| {
            codes
                .iter()
                .map(|&t| 9 - ((n ^ t) & 0x1ff).count_ones() as u8)
                .max()
                .unwrap_or(0)
        })
        .collect();
    Ok(FeatureMap {
        width: b.width,
        height: b.height,
        scores,
    })
}

/// ReLU shifted so that scores at or above `threshold` come out positive.
pub fn threshold_relu(score: u8, threshold: u8) -> u8 {
    (score as i16 - threshold as i16 + 1).max(0) as u8
}

/// Global max of the merged corner response for one image.
pub fn straightness_response(img: &GrayImage, bank: &KernelBank) -> Result<u8, KernelError> {
    let b = binarize(img)?;
    if b.foreground_count() == 0 {
        return Err(KernelError::NoObject);
    }
    Ok(merged_response(&b, bank)?.global_max())
}

/// `1` straight, `0` broken.
pub fn classify_straightness(img: &GrayImage, bank: &KernelBank) -> Result<u8, KernelError> {
    let m = straightness_response(img, bank)?;
    Ok(if threshold_relu(m, bank.decision_threshold) > 0 {
        BROKEN
    } else {
        STRAIGHT
    })
}

/// Real-valued per-pixel map.
#[derive(Clone, Debug, PartialEq)]
pub struct ResponseMap {
    pub width: u32,
    pub height: u32,
    pub values: Vec<f64>,
}

impl ResponseMap {
    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[y as usize * self.width as usize + x as usize]
    }
}

/// Normalized disk kernel: per-row half-widths of the lattice disk
/// `dx² + dy² <= r²` and its cell count.
struct Disk {
    reach: i64,
    half: Vec<i64>,
    cells: usize,
}

impl Disk {
    fn new(r: f64) -> Disk {
        let reach = r.floor() as i64;
        let half: Vec<i64> = (-reach..=reach)
            .map(|dy| {
                let mut dx = 0;
                while ((dx + 1) * (dx + 1) + dy * dy) as f64 <= r * r {
                    dx += 1;
                }
                dx
            })
            .collect();
        let cells = half.iter().map(|&h| (2 * h + 1) as usize).sum();
        Disk { reach, half, cells }
    }
}

/// Row prefix sums of foreground bits, padded so out-of-bounds reads are 0.
struct RowSums {
    width: i64,
    height: i64,
    sums: Vec<u32>,
}

impl RowSums {
    fn new(b: &BinaryMap) -> RowSums {
        let (w, h) = (b.width as i64, b.height as i64);
        let mut sums = vec![0u32; (h * (w + 1)) as usize];
        for y in 0..h {
            let base = (y * (w + 1)) as usize;
            for x in 0..w {
                sums[base + x as usize + 1] = sums[base + x as usize] + b.get(x, y) as u32;
            }
        }
        RowSums {
            width: w,
            height: h,
            sums,
        }
    }

    /// Foreground count on row `y` over columns `[x0, x1]`.
    fn run(&self, y: i64, x0: i64, x1: i64) -> u32 {
        if y < 0 || y >= self.height {
            return 0;
        }
        let (a, b) = (x0.max(0), (x1 + 1).min(self.width));
        if a >= b {
            return 0;
        }
        let base = (y * (self.width + 1)) as usize;
        self.sums[base + b as usize] - self.sums[base + a as usize]
    }

    fn disk_fraction(&self, disk: &Disk, x: i64, y: i64) -> f64 {
        let mut n = 0;
        for (i, &h) in disk.half.iter().enumerate() {
            let dy = i as i64 - disk.reach;
            n += self.run(y + dy, x - h, x + h);
        }
        n as f64 / disk.cells as f64
    }
}

/// Foreground fraction inside the radius-`r` disk around every pixel.
pub fn disk_response_map(b: &BinaryMap, r: f64) -> ResponseMap {
    let disk = Disk::new(r);
    let sums = RowSums::new(b);
    let mut values = Vec::with_capacity(b.bits.len());
    for y in 0..b.height as i64 {
        for x in 0..b.width as i64 {
            values.push(sums.disk_fraction(&disk, x, y));
        }
    }
    ResponseMap {
        width: b.width,
        height: b.height,
        values,
    }
}

/// Foreground pixels with at least one background 4-neighbour.
pub fn boundary_pixels(b: &BinaryMap) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for y in 0..b.height as i64 {
        for x in 0..b.width as i64 {
            if b.get(x, y) && (!b.get(x - 1, y) || !b.get(x + 1, y) || !b.get(x, y - 1) || !b.get(x, y + 1)) {
                out.push((x as u32, y as u32));
            }
        }
    }
    out
}

/// Disk-response convexity classifier.
///
/// The response at a boundary pixel is the foreground fraction of the
/// radius-`radius` disk. Boundary pixel centres sit up to one pixel inside the
/// true edge, which lifts straight-edge responses above 0.5 by up to
/// `2 / (pi * radius)`. When `inner_radius > 0` the response of a smaller disk
/// is subtracted with weight `inner_radius / radius`, which cancels that offset
/// to first order while keeping a reflex vertex of angle `theta` at
/// `0.5 + (1 - inner_radius / radius) * (theta / 2pi - 0.5)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvexityNet {
    pub radius: f64,
    pub inner_radius: f64,
    pub delta: f64,
}

impl Default for ConvexityNet {
    fn default() -> Self {
        ConvexityNet {
            radius: 5.5,
            inner_radius: 2.0,
            delta: 0.035,
        }
    }
}

impl ConvexityNet {
    /// Plain normalized-disk rule without offset compensation.
    pub fn plain(radius: f64, delta: f64) -> Self {
        ConvexityNet {
            radius,
            inner_radius: 0.0,
            delta,
        }
    }

    /// Largest compensated disk response over boundary pixels.
    pub fn boundary_max(&self, img: &GrayImage) -> Result<f64, KernelError> {
        let b = binarize(img)?;
        self.boundary_max_map(&b)
    }

    pub fn boundary_max_map(&self, b: &BinaryMap) -> Result<f64, KernelError> {
        if b.foreground_count() == 0 {
            return Err(KernelError::NoObject);
        }
        let sums = RowSums::new(b);
        let outer = Disk::new(self.radius);
        let inner = (self.inner_radius > 0.0).then(|| Disk::new(self.inner_radius));
        let w = self.inner_radius / self.radius;
        Ok(boundary_pixels(b)
            .into_iter()
            .map(|(x, y)| {
                let (x, y) = (x as i64, y as i64);
                let f = sums.disk_fraction(&outer, x, y);
                match &inner {
                    Some(d) => f - w * (sums.disk_fraction(d, x, y) - 0.5),
                    None => f,
                }
            })
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// `1` convex, `0` concave.
    pub fn classify(&self, img: &GrayImage) -> Result<u8, KernelError> {
        Ok(if self.boundary_max(img)? >= 0.5 + self.delta {
            CONCAVE
        } else {
            CONVEX
        })
    }
}

pub fn classify_convexity(img: &GrayImage, r: f64, delta: f64) -> Result<u8, KernelError> {
    ConvexityNet::plain(r, delta).classify(img)
}

/// Outcome of a threshold sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    pub threshold: u8,
    pub correct: usize,
    pub total: usize,
    /// `(threshold, correct)` for every cutoff in `0..=9`.
    pub sweep: Vec<(u8, usize)>,
}

/// Pick the decision threshold from `(global max response, oracle label)`
/// pairs: the most accurate cutoff, and among equally accurate cutoffs the
/// middle one of the widest contiguous run.
pub fn calibrate_threshold(samples: &[(u8, u8)]) -> Calibration {
    let sweep: Vec<(u8, usize)> = (0..=9u8)
        .map(|t| {
            let correct = samples
                .iter()
                .filter(|&&(m, label)| {
                    let predicted = if threshold_relu(m, t) > 0 { BROKEN } else { STRAIGHT };
                    predicted == label
                })
                .count();
            (t, correct)
        })
        .collect();
    let best = sweep.iter().map(|&(_, c)| c).max().unwrap_or(0);
    let mut runs: Vec<(u8, u8)> = Vec::new();
    for &(t, c) in &sweep {
        if c != best {
            continue;
        }
        match runs.last_mut() {
            Some((_, end)) if *end + 1 == t => *end = t,
            _ => runs.push((t, t)),
        }
    }
    // widest run; ties go to the higher cutoff (fewer false corners)
    let (s, e) = runs
        .into_iter()
        .max_by_key(|&(s, e)| (e - s, s))
        .unwrap_or((9, 9));
    Calibration {
        threshold: s + (e - s) / 2,
        correct: best,
        total: samples.len(),
        sweep,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img_from(map: &BinaryMap, fg: u8, bg: u8) -> GrayImage {
        GrayImage {
            width: map.width,
            height: map.height,
            pixels: map.bits.iter().map(|&b| if b { fg } else { bg }).collect(),
        }
    }

    #[test]
    fn binarize_examples() {
        let black = GrayImage::filled(10, 10, 0);
        assert_eq!(binarize(&black).unwrap().foreground_count(), 0);
        let line = BinaryMap::from_ascii(&["......", ".####.", "......"]);
        assert_eq!(binarize(&img_from(&line, 255, 0)).unwrap(), line);
        assert_eq!(binarize(&img_from(&line, 128, 255)).unwrap(), line);
    }

    #[test]
    fn binarize_tie_is_error() {
        let mut img = GrayImage::filled(2, 2, 0);
        img.set(0, 0, 255);
        img.set(1, 0, 255);
        assert!(matches!(binarize(&img), Err(KernelError::BorderTie(0, 255))));
    }

    #[test]
    fn template_validation() {
        assert!(TemplateKernel::new("all", [[1; 3]; 3]).is_err());
        assert!(TemplateKernel::new("none", [[0; 3]; 3]).is_err());
        assert!(TemplateKernel::new("two", [[2, 0, 0], [0, 1, 0], [0, 0, 0]]).is_err());
    }

    #[test]
    fn uniform_maps_score_cell_counts() {
        let k = TemplateKernel::new("t", [[1, 1, 0], [0, 1, 0], [0, 0, 0]]).unwrap();
        let empty = BinaryMap::new(8, 8);
        let m = template_match_map(&empty, &k).unwrap();
        assert!(m.scores.iter().all(|&s| s == 6));
        let mut full = BinaryMap::new(8, 8);
        full.bits.fill(true);
        let m = template_match_map(&full, &k).unwrap();
        for y in 1..7 {
            for x in 1..7 {
                assert_eq!(m.get(x, y), 3);
            }
        }
        // border pixels see out-of-bounds background
        assert_eq!(m.get(0, 0), 4);
    }

    #[test]
    fn match_score_equals_signed_correlation() {
        // oracle: (9 + Σ t·x) / 2 on a ±1 encoding
        let k = TemplateKernel::new("t", [[1, 0, 1], [1, 1, 1], [0, 0, 1]]).unwrap();
        let map = BinaryMap::from_ascii(&["#..#.", ".##.#", "##..#", "..###", "#.#.."]);
        let m = template_match_map(&map, &k).unwrap();
        for y in 0..5i64 {
            for x in 0..5i64 {
                let mut corr = 0i32;
                for r in 0..3i64 {
                    for c in 0..3i64 {
                        let t = if k.cells[r as usize][c as usize] == 1 { 1 } else { -1 };
                        let v = if map.get(x + c - 1, y + r - 1) { 1 } else { -1 };
                        corr += t * v;
                    }
                }
                assert_eq!(m.get(x as u32, y as u32) as i32, (9 + corr) / 2);
            }
        }
    }

    #[test]
    fn merge_rules() {
        let k = TemplateKernel::new("t", [[1, 0, 1], [1, 1, 1], [0, 0, 1]]).unwrap();
        let map = BinaryMap::from_ascii(&["#..#.", ".##.#", "##..#"]);
        let m = template_match_map(&map, &k).unwrap();
        let copies = vec![m.clone(); 12];
        assert_eq!(max_merge(&copies).unwrap(), m);
        let small = template_match_map(&BinaryMap::new(3, 3), &k).unwrap();
        assert!(matches!(
            max_merge(&[m.clone(), small]),
            Err(KernelError::DimensionMismatch(..))
        ));
        assert_eq!(max_merge(&[]), Err(KernelError::NothingToMerge));
    }

    #[test]
    fn tiny_maps_are_rejected() {
        let k = TemplateKernel::new("t", [[1, 0, 1], [1, 1, 1], [0, 0, 1]]).unwrap();
        assert!(matches!(
            template_match_map(&BinaryMap::new(2, 5), &k),
            Err(KernelError::TooSmall(2, 5))
        ));
    }

    #[test]
    fn threshold_relu_cutoff() {
        assert_eq!(threshold_relu(8, 9), 0);
        assert_eq!(threshold_relu(9, 9), 1);
        assert_eq!(threshold_relu(0, 0), 1);
    }

    #[test]
    fn rotations_cycle() {
        let k = TemplateKernel::new("t", [[1, 0, 1], [1, 1, 1], [0, 0, 1]]).unwrap();
        let r4 = k.rotated("a").rotated("b").rotated("c").rotated("d");
        assert_eq!(r4.cells, k.cells);
        assert_eq!(k.mirrored("m").mirrored("n").cells, k.cells);
        assert_eq!(k.rotated("r").cells, [[0, 1, 1], [0, 1, 0], [1, 1, 1]]);
    }

    #[test]
    fn disk_response_interior_and_edge() {
        let mut b = BinaryMap::new(80, 60);
        for y in 0..60 {
            for x in 0..40 {
                b.set(x, y, true);
            }
        }
        let m = disk_response_map(&b, 15.0);
        assert_eq!(m.get(20, 30), 1.0);
        // the column x=39 sits just inside the edge
        let edge = m.get(39, 30);
        assert!((edge - 0.5).abs() <= 0.05, "{edge}");
    }

    #[test]
    fn boundary_of_block() {
        let b = BinaryMap::from_ascii(&[".....", ".###.", ".###.", ".###.", "....."]);
        let bd = boundary_pixels(&b);
        assert_eq!(bd.len(), 8);
        assert!(!bd.contains(&(2, 2)));
    }

    #[test]
    fn empty_image_has_no_object() {
        let img = GrayImage::filled(20, 20, 0);
        assert_eq!(ConvexityNet::default().classify(&img), Err(KernelError::NoObject));
    }

    #[test]
    fn calibration_picks_separating_cutoff() {
        let samples = vec![(6, STRAIGHT), (7, STRAIGHT), (9, BROKEN), (9, BROKEN)];
        let c = calibrate_threshold(&samples);
        assert_eq!(c.correct, 4);
        assert_eq!(c.threshold, 8);
        assert_eq!(c.sweep.len(), 10);
    }

    #[test]
    fn corner_bank_shape() {
        let bank = corner_bank();
        assert_eq!(bank.kernels.len(), 12);
        assert_eq!(bank.parameter_count(), 108);
        assert_eq!(bank.decision_threshold, 9);
        for (i, a) in bank.kernels.iter().enumerate() {
            let fg = |r: i32, c: i32| (0..3).contains(&r) && (0..3).contains(&c) && a.cells[r as usize][c as usize] == 1;
            let hull_gap = (0..3).any(|r| {
                (0..3).any(|c| {
                    !fg(r, c) && [(0, 1), (1, 0), (1, 1), (1, -1)].iter().any(|&(dr, dc)| fg(r - dr, c - dc) && fg(r + dr, c + dc))
                })
            });
            assert!(hull_gap, "{} could match a convex set", a.id);
            for b in &bank.kernels[i + 1..] {
                assert_ne!(a.cells, b.cells, "{} duplicates {}", a.id, b.id);
            }
        }
        assert_eq!(KernelBank::from_text(&bank.to_text()).unwrap(), bank);
    }

    #[test]
    fn bank_templates_fire_on_their_own_patch_only() {
        for k in &corner_bank().kernels {
            // embed the template in a 9x9 background map at (3..6, 3..6)
            let mut b = BinaryMap::new(9, 9);
            for r in 0..3 {
                for c in 0..3 {
                    b.set(3 + c, 3 + r, k.cells[r as usize][c as usize] == 1);
                }
            }
            let m = template_match_map(&b, k).unwrap();
            assert_eq!(m.get(4, 4), 9, "{}", k.id);
            assert!(m.get(6, 4) < 9 && m.get(4, 6) < 9, "{}", k.id);
        }
    }

    #[test]
    fn compensated_response_flattens_edges() {
        // half-plane below a line of slope 0.37: plain responses drift with the
        // sub-pixel phase, compensated ones stay near one half
        let mut b = BinaryMap::new(80, 80);
        for y in 0..80 {
            for x in 0..80 {
                b.set(x, y, (y as f64 + 0.5) > 20.0 + 0.37 * (x as f64 + 0.5));
            }
        }
        let net = ConvexityNet::default();
        let sums = RowSums::new(&b);
        let (outer, inner) = (Disk::new(net.radius), Disk::new(net.inner_radius));
        let w = net.inner_radius / net.radius;
        for (x, y) in boundary_pixels(&b) {
            if !(10..70).contains(&x) || !(10..70).contains(&y) {
                continue;
            }
            let (x, y) = (x as i64, y as i64);
            let f = sums.disk_fraction(&outer, x, y) - w * (sums.disk_fraction(&inner, x, y) - 0.5);
            assert!((f - 0.5).abs() < net.delta, "({x},{y}) {f}");
        }
    }
}
