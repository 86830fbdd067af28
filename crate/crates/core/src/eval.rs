//! Confusion matrices, precision/recall/F1, per-SNR accuracy and report files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::warn;
use thiserror::Error;

use crate::dataset::Dataset;
use crate::nnet::{predict_batch, Model, NnetError};
use crate::transforms::Representation;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("label {value} at position {index} is outside {k} classes")]
    LabelOutOfRange { index: usize, value: usize, k: usize },
    #[error("{preds} predictions for {truths} truths")]
    Length { preds: usize, truths: usize },
    #[error("confusion matrix is empty")]
    Empty,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed report file: {0}")]
    Parse(String),
    #[error(transparent)]
    Model(#[from] NnetError),
}

pub type Result<T> = std::result::Result<T, EvalError>;

/// Rows are true classes, columns predicted classes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(k: usize) -> Self {
        ConfusionMatrix { counts: vec![vec![0; k]; k] }
    }

    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = counts.len();
        if counts.iter().any(|r| r.len() != k) {
            return Err(EvalError::Parse("confusion matrix is not square".into()));
        }
        Ok(ConfusionMatrix { counts })
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth][pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.k()).map(|i| self.counts[i][i]).sum()
    }

    /// Off-diagonal cells `(truth, pred, count)`, largest first; ties by
    /// position.
    pub fn off_diagonal_ranked(&self) -> Vec<(usize, usize, u64)> {
        let mut cells: Vec<_> = (0..self.k())
            .flat_map(|t| (0..self.k()).filter(move |&p| p != t).map(move |p| (t, p)))
            .map(|(t, p)| (t, p, self.counts[t][p]))
            .collect();
        cells.sort_by_key(|c| std::cmp::Reverse(c.2));
        cells
    }
}

pub fn confusion(preds: &[usize], truths: &[usize], k: usize) -> Result<ConfusionMatrix> {
    if preds.len() != truths.len() {
        return Err(EvalError::Length { preds: preds.len(), truths: truths.len() });
    }
    let mut cm = ConfusionMatrix::zeros(k);
    for (i, (&p, &t)) in preds.iter().zip(truths).enumerate() {
        for v in [p, t] {
            if v >= k {
                return Err(EvalError::LabelOutOfRange { index: i, value: v, k });
            }
        }
        cm.counts[t][p] += 1;
    }
    Ok(cm)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Number of examples whose true class this is.
    pub support: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnrAccuracy {
    pub snr_db: i16,
    pub accuracy: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub per_class: Vec<ClassMetrics>,
    /// Averages weighted by true-class prevalence.
    pub precision_avg: f64,
    pub recall_avg: f64,
    pub f1_avg: f64,
    pub accuracy: f64,
    pub per_snr: Vec<SnrAccuracy>,
    /// Classes where some ratio had a zero denominator and was scored 0.
    pub zero_denominator: Vec<usize>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::Empty);
    }
    let k = cm.k();
    let mut per_class = Vec::with_capacity(k);
    let mut zero_denominator = Vec::new();
    for c in 0..k {
        let tp = cm.counts[c][c];
        let support: u64 = cm.counts[c].iter().sum();
        let predicted: u64 = (0..k).map(|t| cm.counts[t][c]).sum();
        let p = ratio(tp, predicted);
        let r = ratio(tp, support);
        let f1 = match (p, r) {
            (Some(p), Some(r)) if p + r > 0.0 => 2.0 * p * r / (p + r),
            _ => 0.0,
        };
        if p.is_none() || r.is_none() {
            zero_denominator.push(c);
        }
        per_class.push(ClassMetrics { precision: p.unwrap_or(0.0), recall: r.unwrap_or(0.0), f1, support });
    }
    let weighted = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(|m| m.support as f64 * f(m)).sum::<f64>() / total as f64;
    Ok(MetricsReport {
        precision_avg: weighted(|m| m.precision),
        recall_avg: weighted(|m| m.recall),
        f1_avg: weighted(|m| m.f1),
        accuracy: cm.correct() as f64 / total as f64,
        per_class,
        per_snr: Vec::new(),
        zero_denominator,
    })
}

/// Accuracy within each SNR bucket, ascending. Grid values without examples
/// are skipped with a warning.
pub fn per_snr_accuracy(preds: &[usize], truths: &[usize], snrs: &[i16], grid: &[i16]) -> Result<Vec<SnrAccuracy>> {
    if preds.len() != truths.len() || snrs.len() != truths.len() {
        return Err(EvalError::Length { preds: preds.len(), truths: truths.len() });
    }
    let mut buckets: BTreeMap<i16, (usize, usize)> = BTreeMap::new();
    for ((&p, &t), &s) in preds.iter().zip(truths).zip(snrs) {
        let b = buckets.entry(s).or_default();
        b.0 += usize::from(p == t);
        b.1 += 1;
    }
    for g in grid {
        if !buckets.contains_key(g) {
            warn!("no examples at {g} dB; bucket skipped");
        }
    }
    Ok(buckets
        .into_iter()
        .map(|(snr_db, (ok, n))| SnrAccuracy { snr_db, accuracy: ok as f64 / n as f64, count: n })
        .collect())
}

/// Everything needed to write a report for one test set.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub preds: Vec<usize>,
    pub probs: Vec<Vec<f32>>,
    pub confusion: ConfusionMatrix,
    pub report: MetricsReport,
}

/// Transforms, classifies and scores every example of `test`.
pub fn evaluate_model(model: &Model<f32>, repr: Representation, test: &Dataset) -> Result<Evaluation> {
    if model.num_classes() != test.num_classes() {
        return Err(NnetError::Shape(format!("model has {} classes, dataset has {}", model.num_classes(), test.num_classes())).into());
    }
    use rayon::prelude::*;
    let feats: Vec<_> = test.examples.par_iter().map(|e| repr.apply(&e.capture)).collect();
    let out = predict_batch(model, &feats)?;
    let preds: Vec<usize> = out.iter().map(|o| o.0).collect();
    let probs = out.into_iter().map(|o| o.1).collect();
    let truths: Vec<usize> = test.examples.iter().map(|e| e.label).collect();
    let snrs: Vec<i16> = test.examples.iter().map(|e| e.snr_db).collect();
    let confusion = confusion(&preds, &truths, test.num_classes())?;
    let mut report = metrics(&confusion)?;
    report.per_snr = per_snr_accuracy(&preds, &truths, &snrs, &test.snr_grid)?;
    Ok(Evaluation { preds, probs, confusion, report })
}

pub fn confusion_csv(cm: &ConfusionMatrix, class_names: &[String]) -> String {
    let mut s = String::from("true\\pred");
    for n in class_names {
        write!(s, ",{n}").unwrap();
    }
    s.push('\n');
    for (name, row) in class_names.iter().zip(cm.counts()) {
        s.push_str(name);
        for c in row {
            write!(s, ",{c}").unwrap();
        }
        s.push('\n');
    }
    s
}

/// Inverse of [`confusion_csv`].
pub fn parse_confusion_csv(text: &str) -> Result<(Vec<String>, ConfusionMatrix)> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| EvalError::Parse("empty confusion.csv".into()))?;
    let names: Vec<String> = header.split(',').skip(1).map(str::to_owned).collect();
    let mut counts = Vec::new();
    for line in lines.filter(|l| !l.is_empty()) {
        let row = line
            .split(',')
            .skip(1)
            .map(|v| v.parse::<u64>().map_err(|e| EvalError::Parse(format!("{v:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        counts.push(row);
    }
    if counts.len() != names.len() {
        return Err(EvalError::Parse(format!("{} rows for {} classes", counts.len(), names.len())));
    }
    Ok((names, ConfusionMatrix::from_counts(counts)?))
}

pub fn per_snr_csv(rows: &[SnrAccuracy]) -> String {
    let mut s = String::from("snr_db,accuracy,count\n");
    for r in rows {
        writeln!(s, "{},{:.6},{}", r.snr_db, r.accuracy, r.count).unwrap();
    }
    s
}

pub fn summary_text(report: &MetricsReport, class_names: &[String]) -> String {
    let mut s = String::new();
    writeln!(s, "accuracy = {:.6}", report.accuracy).unwrap();
    writeln!(s, "test_error = {:.6}", 1.0 - report.accuracy).unwrap();
    writeln!(s, "precision_weighted = {:.6}", report.precision_avg).unwrap();
    writeln!(s, "recall_weighted = {:.6}", report.recall_avg).unwrap();
    writeln!(s, "f1_weighted = {:.6}", report.f1_avg).unwrap();
    writeln!(s, "\nclass,precision,recall,f1,support").unwrap();
    for (name, m) in class_names.iter().zip(&report.per_class) {
        let mark = if report.zero_denominator.contains(&class_names.iter().position(|n| n == name).unwrap()) { "*" } else { "" };
        writeln!(s, "{name}{mark},{:.6},{:.6},{:.6},{}", m.precision, m.recall, m.f1, m.support).unwrap();
    }
    if !report.zero_denominator.is_empty() {
        writeln!(s, "\n* a ratio had a zero denominator and was scored 0").unwrap();
    }
    s
}

/// Accuracy-vs-SNR polyline on a 0..1 vertical axis.
pub fn curve_svg(rows: &[SnrAccuracy]) -> String {
    let (w, h, pad) = (480.0, 320.0, 40.0);
    let mut s = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n");
    writeln!(s, "<rect x=\"{pad}\" y=\"{pad}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>", w - 2.0 * pad, h - 2.0 * pad).unwrap();
    if let (Some(first), Some(last)) = (rows.first(), rows.last()) {
        let (lo, hi) = (first.snr_db as f64, last.snr_db as f64);
        let span = if hi > lo { hi - lo } else { 1.0 };
        let pts: Vec<String> = rows
            .iter()
            .map(|r| {
                let x = pad + (r.snr_db as f64 - lo) / span * (w - 2.0 * pad);
                let y = h - pad - r.accuracy * (h - 2.0 * pad);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        writeln!(s, "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"{}\"/>", pts.join(" ")).unwrap();
        writeln!(s, "<text x=\"{pad}\" y=\"{}\" font-size=\"12\">{lo} dB</text>", h - 10.0).unwrap();
        writeln!(s, "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\">{hi} dB</text>", w - pad, h - 10.0).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Writes confusion.csv, per_snr.csv, summary.txt and curve.svg into `dir`.
pub fn emit_report(report: &MetricsReport, cm: &ConfusionMatrix, class_names: &[String], dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    fs::write(dir.join("confusion.csv"), confusion_csv(cm, class_names))?;
    fs::write(dir.join("per_snr.csv"), per_snr_csv(&report.per_snr))?;
    fs::write(dir.join("summary.txt"), summary_text(report, class_names))?;
    fs::write(dir.join("curve.svg"), curve_svg(&report.per_snr))?;
    Ok(())
}
