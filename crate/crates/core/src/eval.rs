//! Scoring prediction files against manifests and rendering accuracy tables.
//!
//! Counts stay integral throughout; percentages appear only in rendered text.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tasks::{ColorMode, DatasetManifest, Split, SplitPolicy, Task};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("prediction file must have header `id,label`, got `{0}`")]
    BadHeader(String),
    #[error("duplicate prediction for {0}")]
    DuplicateId(String),
    #[error("prediction for {id} is `{value}`, expected 0 or 1")]
    BadLabel { id: String, value: String },
    #[error("prediction for {0}, which is not in the manifest")]
    UnknownId(String),
    #[error("{count} test items have no prediction, first {first}")]
    Missing { count: usize, first: String },
    #[error("report CSV row {row}: {message}")]
    BadReport { row: usize, message: String },
}

/// Predicted labels of one classifier, in file order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredictionSet {
    pub classifier: String,
    pub entries: Vec<(String, u8)>,
}

impl PredictionSet {
    pub fn new(classifier: impl Into<String>) -> Self {
        PredictionSet {
            classifier: classifier.into(),
            entries: Vec::new(),
        }
    }

    /// Parse CSV with header `id,label`. Duplicate ids and labels other than
    /// `0`/`1` are errors.
    pub fn from_csv<R: io::Read>(reader: R, classifier: impl Into<String>) -> Result<Self, EvalError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.len() != 2 || &header[0] != "id" || &header[1] != "label" {
            return Err(EvalError::BadHeader(header.iter().collect::<Vec<_>>().join(",")));
        }
        let mut set = PredictionSet::new(classifier);
        let mut seen = HashSet::new();
        for rec in rdr.records() {
            let rec = rec?;
            let id = rec[0].to_string();
            let label = match &rec[1] {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(EvalError::BadLabel {
                        id,
                        value: other.to_string(),
                    })
                }
            };
            if !seen.insert(id.clone()) {
                return Err(EvalError::DuplicateId(id));
            }
            set.entries.push((id, label));
        }
        Ok(set)
    }

    /// Read a prediction file; the classifier name defaults to the file stem.
    pub fn read(path: &Path, classifier: Option<&str>) -> Result<Self, EvalError> {
        let file = std::fs::File::open(path).map_err(|source| EvalError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let name = classifier.map(str::to_string).unwrap_or_else(|| {
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "predictions".into())
        });
        PredictionSet::from_csv(file, name)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["id", "label"]).expect("in-memory write");
        for (id, label) in &self.entries {
            w.write_record([id.as_str(), if *label == 1 { "1" } else { "0" }])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }
}

/// Confusion counts with label 1 as the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Confusion {
    pub fn add(&mut self, truth: u8, pred: u8) {
        match (truth, pred) {
            (1, 1) => self.tp += 1,
            (0, 0) => self.tn += 1,
            (0, _) => self.fp += 1,
            _ => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn correct(&self) -> u64 {
        self.tp + self.tn
    }

    pub fn accuracy(&self) -> Ratio {
        Ratio(self.correct(), self.total())
    }

    /// Accuracy on items whose true label is `label`.
    pub fn class_accuracy(&self, label: u8) -> Ratio {
        if label == 1 {
            Ratio(self.tp, self.tp + self.fn_)
        } else {
            Ratio(self.tn, self.tn + self.fp)
        }
    }

    fn merge(&mut self, o: &Confusion) {
        self.tp += o.tp;
        self.tn += o.tn;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }
}

/// Exact `numerator / denominator`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ratio(pub u64, pub u64);

impl Ratio {
    pub fn value(self) -> f64 {
        if self.1 == 0 {
            f64::NAN
        } else {
            self.0 as f64 / self.1 as f64
        }
    }

    /// Rounded to the nearest tenth of a percent, half up.
    pub fn permille(self) -> Option<u64> {
        (self.1 > 0).then(|| (2000 * self.0 + self.1) / (2 * self.1))
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.permille() {
            Some(p) => write!(f, "{}", Permille(p)),
            None => f.write_str("n/a"),
        }
    }
}

struct Permille(u64);

impl fmt::Display for Permille {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}%", self.0 / 10, self.0 % 10)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowKey {
    pub task: Task,
    pub color_mode: ColorMode,
    pub policy: SplitPolicy,
    pub split: Split,
    pub classifier: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EvalReport {
    pub rows: BTreeMap<RowKey, Confusion>,
}

impl EvalReport {
    pub fn merge(&mut self, other: &EvalReport) {
        for (k, c) in &other.rows {
            self.rows.entry(k.clone()).or_default().merge(c);
        }
    }

    pub fn get(&self, task: Task, color_mode: ColorMode, policy: SplitPolicy, split: Split, classifier: &str) -> Option<&Confusion> {
        self.rows.get(&RowKey {
            task,
            color_mode,
            policy,
            split,
            classifier: classifier.to_string(),
        })
    }
}

/// Score `preds` against `manifest`.
///
/// Every test item must have a prediction. Train items are scored when
/// predicted. Predictions for ids outside the manifest are errors.
pub fn score(manifest: &DatasetManifest, preds: &PredictionSet) -> Result<EvalReport, EvalError> {
    let mut by_id: HashMap<&str, u8> = HashMap::with_capacity(preds.entries.len());
    for (id, label) in &preds.entries {
        if by_id.insert(id.as_str(), *label).is_some() {
            return Err(EvalError::DuplicateId(id.clone()));
        }
    }
    let known: HashSet<&str> = manifest.entries.iter().map(|e| e.id.as_str()).collect();
    if let Some((id, _)) = preds.entries.iter().find(|(id, _)| !known.contains(id.as_str())) {
        return Err(EvalError::UnknownId(id.clone()));
    }
    let missing: Vec<&str> = manifest
        .split(Split::Test)
        .filter(|e| !by_id.contains_key(e.id.as_str()))
        .map(|e| e.id.as_str())
        .collect();
    if let Some(first) = missing.first() {
        return Err(EvalError::Missing {
            count: missing.len(),
            first: first.to_string(),
        });
    }
    let mut report = EvalReport::default();
    for e in &manifest.entries {
        let Some(&pred) = by_id.get(e.id.as_str()) else {
            continue;
        };
        let key = RowKey {
            task: e.task,
            color_mode: e.color_mode,
            policy: e.policy,
            split: e.split,
            classifier: preds.classifier.clone(),
        };
        report.rows.entry(key).or_default().add(e.label, pred);
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    Markdown,
    Csv,
}

pub fn render_report(r: &EvalReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Markdown => render_markdown(r),
        ReportFormat::Csv => render_csv(r),
    }
}

const CSV_HEADER: [&str; 12] = [
    "task",
    "color_mode",
    "policy",
    "split",
    "classifier",
    "tp",
    "tn",
    "fp",
    "fn",
    "accuracy",
    "class0_accuracy",
    "class1_accuracy",
];

fn render_csv(r: &EvalReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    let ratio = |x: Ratio| if x.1 == 0 { String::new() } else { format!("{}/{}", x.0, x.1) };
    for (k, c) in &r.rows {
        w.write_record([
            k.task.as_str().to_string(),
            k.color_mode.as_str().to_string(),
            k.policy.as_str().to_string(),
            k.split.as_str().to_string(),
            k.classifier.clone(),
            c.tp.to_string(),
            c.tn.to_string(),
            c.fp.to_string(),
            c.fn_.to_string(),
            ratio(c.accuracy()),
            ratio(c.class_accuracy(0)),
            ratio(c.class_accuracy(1)),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

fn parse_enum<T: for<'de> Deserialize<'de>>(s: &str) -> Option<T> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).ok()
}

/// Parse the CSV written by [`render_report`]. Derived ratio columns are
/// checked against the counts.
pub fn parse_report_csv<R: io::Read>(reader: R) -> Result<EvalReport, EvalError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(EvalError::BadReport {
            row: 0,
            message: "unexpected header".into(),
        });
    }
    let mut report = EvalReport::default();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |message: String| EvalError::BadReport { row: i + 1, message };
        let field = |j: usize| -> Result<u64, EvalError> {
            rec[j].parse().map_err(|_| bad(format!("`{}` is not a count", &rec[j])))
        };
        let key = RowKey {
            task: parse_enum(&rec[0]).ok_or_else(|| bad(format!("unknown task {}", &rec[0])))?,
            color_mode: parse_enum(&rec[1]).ok_or_else(|| bad(format!("unknown color mode {}", &rec[1])))?,
            policy: parse_enum(&rec[2]).ok_or_else(|| bad(format!("unknown policy {}", &rec[2])))?,
            split: parse_enum(&rec[3]).ok_or_else(|| bad(format!("unknown split {}", &rec[3])))?,
            classifier: rec[4].to_string(),
        };
        let c = Confusion {
            tp: field(5)?,
            tn: field(6)?,
            fp: field(7)?,
            fn_: field(8)?,
        };
        let total = c.total();
        if total > 0 && rec[9] != *format!("{}/{}", c.correct(), total) {
            return Err(bad(format!("accuracy `{}` disagrees with the counts", &rec[9])));
        }
        if report.rows.insert(key, c).is_some() {
            return Err(bad("duplicate row".into()));
        }
    }
    Ok(report)
}

/// `(task, color mode, policy, per-classifier accuracy)`.
pub type ReferenceRow = (Task, Option<ColorMode>, SplitPolicy, [Option<u16>; 4]);

/// Published CNN test accuracies, in tenths of a percent.
///
/// Columns are `alexnet`, `vgg19`, `resnet34`, `densenet121`; the left/right
/// table has AlexNet only. `color_mode` is `None` for the two-object tasks,
/// whose tables do not distinguish color modes.
pub const PUBLISHED_REFERENCE: &[ReferenceRow] = {
    use ColorMode::*;
    use SplitPolicy::*;
    use Task::*;
    &[
        (LeftRight, None, ScaleUp, [Some(1000), None, None, None]),
        (LeftRight, None, ScaleDown, [Some(961), None, None, None]),
        (LeftRight, None, IrregularConvex, [Some(995), None, None, None]),
        (LeftRight, None, NonConvex, [Some(1000), None, None, None]),
        (FrontBack, None, SizeExtrapolation, [Some(908), Some(902), Some(870), Some(894)]),
        (FrontBack, None, SizeInterpolation, [Some(905), Some(970), Some(941), Some(945)]),
        (FrontBack, None, IrregularConvex, [Some(911), Some(725), Some(869), Some(926)]),
        (Size, None, SizeExtrapolation, [Some(844), Some(765), Some(864), Some(739)]),
        (Size, None, SizeInterpolation, [Some(916), Some(658), Some(978), Some(884)]),
        (Size, None, IrregularConvex, [Some(946), Some(956), Some(923), Some(872)]),
        (Size, None, NonConvex, [Some(928), Some(938), Some(922), Some(873)]),
        (Convexity, Some(TwoColor), SizeExtrapolation, [Some(689), Some(849), Some(718), Some(858)]),
        (Convexity, Some(TwoColor), SizeInterpolation, [Some(815), Some(959), Some(912), Some(955)]),
        (Convexity, Some(ThreeColor), SizeExtrapolation, [Some(612), Some(572), Some(654), Some(692)]),
        (Convexity, Some(ThreeColor), SizeInterpolation, [Some(754), Some(781), Some(909), Some(819)]),
        (Straightness, Some(TwoColor), SizeExtrapolation, [Some(725), Some(912), Some(827), Some(873)]),
        (Straightness, Some(TwoColor), SizeInterpolation, [Some(821), Some(966), Some(951), Some(904)]),
        (Straightness, Some(ThreeColor), SizeExtrapolation, [Some(658), Some(725), Some(784), Some(757)]),
        (Straightness, Some(ThreeColor), SizeInterpolation, [Some(788), Some(836), Some(805), Some(926)]),
    ]
};

pub const PUBLISHED_CLASSIFIERS: [&str; 4] = ["alexnet", "vgg19", "resnet34", "densenet121"];

/// Published test accuracy (tenths of a percent) for a table cell.
pub fn published_reference(task: Task, color_mode: ColorMode, policy: SplitPolicy, classifier: &str) -> Option<u16> {
    let col = PUBLISHED_CLASSIFIERS.iter().position(|&c| c == classifier)?;
    PUBLISHED_REFERENCE
        .iter()
        .find(|(t, m, p, _)| *t == task && *p == policy && m.is_none_or(|m| m == color_mode))
        .and_then(|row| row.3[col])
}

fn table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = header.iter().map(|h| h.len().max(3)).collect();
    for r in rows {
        for (w, cell) in width.iter_mut().zip(r) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells.iter().zip(&width).map(|(c, w)| format!("{c:<w$}")).collect();
        format!("| {} |\n", padded.join(" | "))
    };
    let mut s = line(header);
    let rule: Vec<String> = width.iter().map(|w| "-".repeat(*w)).collect();
    s.push_str(&format!("|-{}-|\n", rule.join("-|-")));
    for r in rows {
        s.push_str(&line(r));
    }
    s
}

/// One table per (task, color mode): rows policy and split, columns classifiers.
fn render_markdown(r: &EvalReport) -> String {
    let mut groups: BTreeMap<(Task, ColorMode), Vec<(&RowKey, &Confusion)>> = BTreeMap::new();
    for (k, c) in &r.rows {
        groups.entry((k.task, k.color_mode)).or_default().push((k, c));
    }
    if groups.is_empty() {
        return table(&["policy".into(), "split".into()], &[]);
    }
    let mut out = String::new();
    for ((task, mode), items) in &groups {
        let mut classifiers: Vec<&str> = items.iter().map(|(k, _)| k.classifier.as_str()).collect();
        classifiers.sort();
        classifiers.dedup();
        let mut cells: BTreeMap<(SplitPolicy, Split), BTreeMap<&str, &Confusion>> = BTreeMap::new();
        for (k, c) in items {
            cells.entry((k.policy, k.split)).or_default().insert(k.classifier.as_str(), c);
        }
        let mut header = vec!["policy".to_string(), "split".to_string()];
        header.extend(classifiers.iter().map(|c| c.to_string()));
        let rows: Vec<Vec<String>> = cells
            .iter()
            .map(|((p, s), by)| {
                let mut row = vec![p.to_string(), s.to_string()];
                row.extend(
                    classifiers
                        .iter()
                        .map(|c| by.get(c).map(|x| x.accuracy().to_string()).unwrap_or_default()),
                );
                row
            })
            .collect();
        out.push_str(&format!("### {task} / {mode}\n\n"));
        out.push_str(&table(&header, &rows));
        out.push('\n');

        let policies: Vec<SplitPolicy> = cells.keys().filter(|(_, s)| *s == Split::Test).map(|(p, _)| *p).collect();
        let published_rows: Vec<Vec<String>> = policies
            .iter()
            .filter_map(|&p| {
                let vals: Vec<String> = PUBLISHED_CLASSIFIERS
                    .iter()
                    .map(|c| published_reference(*task, *mode, p, c).map(|v| Permille(v as u64).to_string()).unwrap_or_default())
                    .collect();
                vals.iter().any(|v| !v.is_empty()).then(|| {
                    let mut row = vec![p.to_string(), "test".to_string()];
                    row.extend(vals);
                    row
                })
            })
            .collect();
        if !published_rows.is_empty() {
            let mut header = vec!["policy".to_string(), "split".to_string()];
            header.extend(PUBLISHED_CLASSIFIERS.iter().map(|c| c.to_string()));
            out.push_str(&format!("published reference ({task} / {mode}):\n\n"));
            out.push_str(&table(&header, &published_rows));
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::{generate, TaskConfig};

    fn manifest() -> DatasetManifest {
        let mut c = TaskConfig::new(Task::Straightness, 9);
        c.count_per_class = 2;
        c.test_count_per_class = 5;
        generate(&c, 1).unwrap()
    }

    fn truth(m: &DatasetManifest, split: Split) -> PredictionSet {
        PredictionSet {
            classifier: "oracle".into(),
            entries: m.split(split).map(|e| (e.id.clone(), e.label)).collect(),
        }
    }

    #[test]
    fn perfect_and_complement() {
        let m = manifest();
        let p = truth(&m, Split::Test);
        let r = score(&m, &p).unwrap();
        let c = r.get(Task::Straightness, ColorMode::TwoColor, SplitPolicy::Iid, Split::Test, "oracle").unwrap();
        assert_eq!(c.accuracy(), Ratio(10, 10));
        let flipped = PredictionSet {
            classifier: "oracle".into(),
            entries: p.entries.iter().map(|(id, l)| (id.clone(), 1 - l)).collect(),
        };
        let r = score(&m, &flipped).unwrap();
        let c = r.rows.values().next().unwrap();
        assert_eq!(c.accuracy().permille(), Some(0));
        assert_eq!(c.total(), 10);
    }

    #[test]
    fn id_errors() {
        let m = manifest();
        let mut p = truth(&m, Split::Test);
        p.entries.pop();
        assert!(matches!(score(&m, &p), Err(EvalError::Missing { count: 1, .. })));
        let mut p = truth(&m, Split::Test);
        p.entries.push(("nope".into(), 1));
        assert!(matches!(score(&m, &p), Err(EvalError::UnknownId(_))));
        let mut p = truth(&m, Split::Test);
        p.entries.push(p.entries[0].clone());
        assert!(matches!(score(&m, &p), Err(EvalError::DuplicateId(_))));
    }

    #[test]
    fn csv_prediction_parsing() {
        let p = PredictionSet::from_csv("id,label\na,1\nb,0\n".as_bytes(), "x").unwrap();
        assert_eq!(p.entries, vec![("a".into(), 1), ("b".into(), 0)]);
        assert_eq!(PredictionSet::from_csv(p.to_csv().as_bytes(), "x").unwrap(), p);
        assert!(matches!(
            PredictionSet::from_csv("id,label\na,2\n".as_bytes(), "x"),
            Err(EvalError::BadLabel { .. })
        ));
        assert!(matches!(
            PredictionSet::from_csv("id,label\na,1\na,0\n".as_bytes(), "x"),
            Err(EvalError::DuplicateId(_))
        ));
        assert!(matches!(
            PredictionSet::from_csv("name,pred\na,1\n".as_bytes(), "x"),
            Err(EvalError::BadHeader(_))
        ));
    }

    #[test]
    fn rounding_to_tenths() {
        assert_eq!(Ratio(908, 1000).to_string(), "90.8%");
        assert_eq!(Ratio(2, 3).to_string(), "66.7%");
        assert_eq!(Ratio(1, 3).to_string(), "33.3%");
        assert_eq!(Ratio(1, 8).to_string(), "12.5%");
        assert_eq!(Ratio(0, 0).to_string(), "n/a");
    }

    #[test]
    fn empty_report_is_header_only() {
        let s = render_report(&EvalReport::default(), ReportFormat::Markdown);
        assert_eq!(s.lines().count(), 2);
        let s = render_report(&EvalReport::default(), ReportFormat::Csv);
        assert_eq!(s.lines().count(), 1);
    }

    #[test]
    fn published_lookup() {
        assert_eq!(
            published_reference(Task::FrontBack, ColorMode::ThreeColor, SplitPolicy::SizeExtrapolation, "alexnet"),
            Some(908)
        );
        assert_eq!(
            published_reference(Task::Convexity, ColorMode::ThreeColor, SplitPolicy::SizeInterpolation, "resnet34"),
            Some(909)
        );
        assert_eq!(published_reference(Task::LeftRight, ColorMode::TwoColor, SplitPolicy::ScaleUp, "vgg19"), None);
        assert_eq!(published_reference(Task::Straightness, ColorMode::TwoColor, SplitPolicy::Iid, "alexnet"), None);
    }
}
