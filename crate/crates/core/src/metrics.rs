//! Confusion matrices and per-class classification reports.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("y_true has {truth} labels but y_pred has {pred}")]
    ShapeMismatch { truth: usize, pred: usize },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("confusion matrix has no samples")]
    EmptyMatrix,
    #[error("serialization failed: {0}")]
    Serialize(String),
}

pub type Result<T> = std::result::Result<T, MetricsError>;

/// `m[i][j]` counts samples of true class `i` predicted as `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub m: Vec<Vec<u64>>,
    pub class_names: Vec<String>,
}

impl ConfusionMatrix {
    pub fn num_classes(&self) -> usize {
        self.m.len()
    }

    pub fn total(&self) -> u64 {
        self.m.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.m.len()).map(|i| self.m[i][i]).sum()
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.m[i].iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> u64 {
        self.m.iter().map(|row| row[j]).sum()
    }

    /// CSV with class names as header row and first column.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![String::new()];
        header.extend(self.class_names.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for (name, row) in self.class_names.iter().zip(&self.m) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(u64::to_string));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8 input")
    }
}

pub fn confusion(
    y_true: &[usize],
    y_pred: &[usize],
    class_names: &[String],
) -> Result<ConfusionMatrix> {
    let k = class_names.len();
    if y_true.len() != y_pred.len() {
        return Err(MetricsError::ShapeMismatch {
            truth: y_true.len(),
            pred: y_pred.len(),
        });
    }
    let mut m = vec![vec![0u64; k]; k];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if let Some(&label) = [t, p].iter().find(|&&c| c >= k) {
            return Err(MetricsError::LabelOutOfRange { label, classes: k });
        }
        m[t][p] += 1;
    }
    Ok(ConfusionMatrix {
        m,
        class_names: class_names.to_vec(),
    })
}

/// Values substituted when a ratio has a zero denominator.
///
/// `precision` applies to classes that were never predicted, `recall` to
/// classes with no support. The defaults (1.0) mirror the published
/// base-model table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroDivision {
    pub precision: f64,
    pub recall: f64,
}

impl Default for ZeroDivision {
    fn default() -> Self {
        Self {
            precision: 1.0,
            recall: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AverageScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub classes: Vec<ClassScores>,
    pub accuracy: f64,
    pub macro_avg: AverageScores,
    pub weighted_avg: AverageScores,
    pub total_support: u64,
}

fn ratio(num: u64, den: u64, fallback: f64) -> f64 {
    if den == 0 {
        fallback
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn report(cm: &ConfusionMatrix) -> Result<ClassificationReport> {
    report_with(cm, ZeroDivision::default())
}

pub fn report_with(cm: &ConfusionMatrix, zero: ZeroDivision) -> Result<ClassificationReport> {
    let total = cm.total();
    if total == 0 {
        return Err(MetricsError::EmptyMatrix);
    }
    let classes: Vec<ClassScores> = (0..cm.num_classes())
        .map(|c| {
            let tp = cm.m[c][c];
            let precision = ratio(tp, cm.col_sum(c), zero.precision);
            let recall = ratio(tp, cm.row_sum(c), zero.recall);
            ClassScores {
                class: cm.class_names[c].clone(),
                precision,
                recall,
                f1: f1(precision, recall),
                support: cm.row_sum(c),
            }
        })
        .collect();
    let k = classes.len() as f64;
    let macro_avg = AverageScores {
        precision: classes.iter().map(|s| s.precision).sum::<f64>() / k,
        recall: classes.iter().map(|s| s.recall).sum::<f64>() / k,
        f1: classes.iter().map(|s| s.f1).sum::<f64>() / k,
    };
    let weighted = |f: fn(&ClassScores) -> f64| {
        classes
            .iter()
            .map(|s| f(s) * s.support as f64)
            .sum::<f64>()
            / total as f64
    };
    let weighted_avg = AverageScores {
        precision: weighted(|s| s.precision),
        recall: weighted(|s| s.recall),
        f1: weighted(|s| s.f1),
    };
    Ok(ClassificationReport {
        accuracy: cm.trace() as f64 / total as f64,
        classes,
        macro_avg,
        weighted_avg,
        total_support: total,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
    Json,
}

/// Four decimals, ties to even.
pub fn round4(v: f64) -> String {
    format!("{v:.4}")
}

pub fn render_report(report: &ClassificationReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Text => Ok(render_text(report)),
        ReportFormat::Csv => Ok(render_csv(report)),
        ReportFormat::Json => serde_json::to_string_pretty(report)
            .map(|mut s| {
                s.push('\n');
                s
            })
            .map_err(|e| MetricsError::Serialize(e.to_string())),
    }
}

pub fn parse_json_report(text: &str) -> Result<ClassificationReport> {
    serde_json::from_str(text).map_err(|e| MetricsError::Serialize(e.to_string()))
}

fn render_text(r: &ClassificationReport) -> String {
    let width = r
        .classes
        .iter()
        .map(|c| c.class.len())
        .chain(["Weighted average".len()])
        .max()
        .unwrap_or(0);
    let mut out = format!(
        "{:<width$}  {:>9}  {:>9}  {:>9}  {:>9}\n",
        "Class", "Precision", "Recall", "F1 Score", "Support"
    );
    for c in &r.classes {
        out.push_str(&format!(
            "{:<width$}  {:>9}  {:>9}  {:>9}  {:>9}\n",
            c.class,
            round4(c.precision),
            round4(c.recall),
            round4(c.f1),
            c.support
        ));
    }
    out.push('\n');
    out.push_str(&format!(
        "{:<width$}  {:>9}  {:>9}  {:>9}  {:>9}\n",
        "Accuracy",
        "",
        "",
        round4(r.accuracy),
        r.total_support
    ));
    for (label, avg) in [("Macro average", r.macro_avg), ("Weighted average", r.weighted_avg)] {
        out.push_str(&format!(
            "{:<width$}  {:>9}  {:>9}  {:>9}  {:>9}\n",
            label,
            round4(avg.precision),
            round4(avg.recall),
            round4(avg.f1),
            r.total_support
        ));
    }
    out
}

fn render_csv(r: &ClassificationReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut put = |fields: [String; 5]| w.write_record(&fields).expect("in-memory write");
    put(["class", "precision", "recall", "f1", "support"].map(String::from));
    for c in &r.classes {
        put([
            c.class.clone(),
            round4(c.precision),
            round4(c.recall),
            round4(c.f1),
            c.support.to_string(),
        ]);
    }
    put([
        "accuracy".into(),
        String::new(),
        String::new(),
        round4(r.accuracy),
        r.total_support.to_string(),
    ]);
    for (label, avg) in [("macro avg", r.macro_avg), ("weighted avg", r.weighted_avg)] {
        put([
            label.into(),
            round4(avg.precision),
            round4(avg.recall),
            round4(avg.f1),
            r.total_support.to_string(),
        ]);
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8 input")
}
