use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::eval::Counts;
use crate::types::LabelId;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    /// F1 is zero when precision and recall are both zero.
    pub fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        Self { precision, recall, f1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSummary {
    pub label: LabelId,
    pub instances: u64,
    /// Instances with a ground-truth boundary.
    pub scored: u64,
    /// Scored instances where the label is on.
    pub support: u64,
    pub has_truth: bool,
    pub mean: Prf,
    pub counts: Counts,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthBucket {
    pub count: u64,
    pub mean: Prf,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        Self { mean: crate::scalar::mean(values), std: crate::scalar::sample_std(values) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuntimeStats {
    pub sequences: u64,
    pub failed: u64,
    pub total_seconds: f64,
    pub seconds_per_sequence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub instances: u64,
    pub scored: u64,
    pub excluded_no_truth: u64,
    pub labels_without_truth: u64,
    pub micro: Prf,
    pub micro_counts: Counts,
    #[serde(rename = "macro")]
    pub macro_avg: Prf,
    pub weighted: Prf,
    pub per_label: Vec<LabelSummary>,
    pub by_mb_length: BTreeMap<usize, LengthBucket>,
    pub runtime: Option<RuntimeStats>,
}

impl AggregateReport {
    /// Aligned-column summary. `names[j]` labels row `j`.
    pub fn to_text(&self, names: &[String]) -> String {
        let mut s = String::new();
        let width = names.iter().map(String::len).max().unwrap_or(5).max(8);
        let _ = writeln!(s, "{:<width$}  {:>9}  {:>9}  {:>9}", "average", "precision", "recall", "f1");
        for (name, m) in [("micro", self.micro), ("macro", self.macro_avg), ("weighted", self.weighted)] {
            let _ = writeln!(s, "{:<width$}  {:>9.4}  {:>9.4}  {:>9.4}", name, m.precision, m.recall, m.f1);
        }
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:<width$}  {:>9}  {:>9}  {:>9}  {:>9}  {:>7}",
            "label", "precision", "recall", "f1", "instances", "support"
        );
        for l in &self.per_label {
            let name = names.get(l.label).map(String::as_str).unwrap_or("?");
            if l.has_truth {
                let _ = writeln!(
                    s,
                    "{:<width$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>9}  {:>7}",
                    name, l.mean.precision, l.mean.recall, l.mean.f1, l.instances, l.support
                );
            } else {
                let _ = writeln!(s, "{:<width$}  {:>9}  {:>9}  {:>9}  {:>9}  {:>7}", name, "-", "-", "-", l.instances, "-");
            }
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "{:>9}  {:>9}  {:>9}  {:>9}  {:>7}", "mb_length", "precision", "recall", "f1", "count");
        for (len, b) in &self.by_mb_length {
            let _ = writeln!(s, "{:>9}  {:>9.4}  {:>9.4}  {:>9.4}  {:>7}", len, b.mean.precision, b.mean.recall, b.mean.f1, b.count);
        }
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "scored {} of {} instances; {} without ground truth",
            self.scored, self.instances, self.excluded_no_truth
        );
        if let Some(r) = &self.runtime {
            let _ = writeln!(
                s,
                "runtime {:.3} s over {} sequences ({:.5} s each, {} failed)",
                r.total_seconds, r.sequences, r.seconds_per_sequence, r.failed
            );
        }
        s
    }

    pub fn by_length_csv(&self) -> String {
        let mut s = String::from("mb_length,count,precision,recall,f1\n");
        for (len, b) in &self.by_mb_length {
            let _ = writeln!(s, "{},{},{},{},{}", len, b.count, b.mean.precision, b.mean.recall, b.mean.f1);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub folds: usize,
    pub micro_f1: MeanStd,
    pub macro_f1: MeanStd,
    pub weighted_f1: MeanStd,
    pub weighted_precision: MeanStd,
    pub weighted_recall: MeanStd,
}
