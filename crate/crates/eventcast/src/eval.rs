//! Stratified splitting, the multiclass confusion matrix, and the derived
//! metrics: accuracy plus macro-averaged one-vs-rest precision, recall, and
//! F1. Zero-denominator metrics are defined as 0 and the class still counts
//! toward the macro mean.

use serde::{Deserialize, Serialize};

use crate::encode::EncodedDataset;
use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// Split a dataset into disjoint train/test parts, preserving per-class
/// proportions within one row. Deterministic for a given seed.
pub fn stratified_split(
    dataset: &EncodedDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(EncodedDataset, EncodedDataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::config(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let mut per_class = vec![Vec::new(); dataset.n_classes()];
    for (row, &label) in dataset.labels.iter().enumerate() {
        per_class[label as usize].push(row);
    }
    let rng = StreamRng::new(seed).derive("split");
    let mut test_rows = Vec::new();
    let mut train_rows = Vec::new();
    for (class, rows) in per_class.iter_mut().enumerate() {
        if rows.is_empty() {
            continue;
        }
        if rows.len() < 2 {
            return Err(Error::data(format!(
                "class {:?} has fewer than 2 rows; cannot stratify",
                dataset.class_names[class]
            )));
        }
        let mut class_rng = rng.derive_indexed("class", class as u64);
        class_rng.shuffle(rows);
        let want = (test_fraction * rows.len() as f64).round() as usize;
        let take = want.clamp(1, rows.len() - 1);
        test_rows.extend_from_slice(&rows[..take]);
        train_rows.extend_from_slice(&rows[take..]);
    }
    test_rows.sort_unstable();
    train_rows.sort_unstable();
    Ok((
        dataset.subset_rows(&train_rows),
        dataset.subset_rows(&test_rows),
    ))
}

/// Counts of (true class, predicted class) pairs. Rows are the true class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
    pub class_names: Vec<String>,
}

/// Tally a confusion matrix from parallel truth/prediction vectors.
pub fn confusion(y_true: &[u32], y_pred: &[u32], class_names: &[String]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::data(format!(
            "length mismatch: {} true labels vs {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    let c = class_names.len();
    let mut counts = vec![vec![0u64; c]; c];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        let (t, p) = (t as usize, p as usize);
        if t >= c || p >= c {
            return Err(Error::data(format!(
                "class code out of range: true {t}, predicted {p}, {c} classes"
            )));
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix {
        counts,
        class_names: class_names.to_vec(),
    })
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// CSV rendering: one row per true class, columns are predicted classes.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("true_class");
        for name in &self.class_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (i, row) in self.counts.iter().enumerate() {
            out.push_str(&self.class_names[i]);
            for v in row {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// One-vs-rest metrics for a single class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

/// Metrics derived from a confusion matrix, plus the training wall time for
/// model-selection reports. Wall time is measured, not derived from the
/// data, so it stays out of the serialized artifact to keep reruns
/// byte-identical; the CLI reports it in a separate timing table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub per_class: Vec<ClassMetrics>,
    #[serde(skip, default)]
    pub train_wall_time: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Compute accuracy and per-class precision/recall/F1 from a confusion
/// matrix, with macro (unweighted) averages across classes.
pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::data("empty confusion matrix".to_string()));
    }
    let c = cm.class_names.len();
    let mut per_class = Vec::with_capacity(c);
    let mut trace = 0u64;
    for k in 0..c {
        let tp = cm.counts[k][k];
        trace += tp;
        let row_sum: u64 = cm.counts[k].iter().sum();
        let col_sum: u64 = cm.counts.iter().map(|r| r[k]).sum();
        let precision = ratio(tp, col_sum);
        let recall = ratio(tp, row_sum);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        per_class.push(ClassMetrics {
            class: cm.class_names[k].clone(),
            precision,
            recall,
            f1,
            support: row_sum,
        });
    }
    let c_f = c as f64;
    Ok(MetricReport {
        accuracy: trace as f64 / total as f64,
        macro_precision: per_class.iter().map(|m| m.precision).sum::<f64>() / c_f,
        macro_recall: per_class.iter().map(|m| m.recall).sum::<f64>() / c_f,
        macro_f1: per_class.iter().map(|m| m.f1).sum::<f64>() / c_f,
        per_class,
        train_wall_time: 0.0,
    })
}

impl MetricReport {
    /// CSV rendering: one row per class plus a macro summary row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,precision,recall,f1,support\n");
        for m in &self.per_class {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                m.class, m.precision, m.recall, m.f1, m.support
            ));
        }
        out.push_str(&format!(
            "_macro,{},{},{},{}\n",
            self.macro_precision,
            self.macro_recall,
            self.macro_f1,
            self.per_class.iter().map(|m| m.support).sum::<u64>()
        ));
        out
    }
}
