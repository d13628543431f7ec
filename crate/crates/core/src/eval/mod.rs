//! Scoring recovered Markov boundaries against ground truth.

pub mod report;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{EventId, LabelId, LabeledSequence, MarkovBoundarySet};

pub use report::{AggregateReport, FoldReport, LabelSummary, LengthBucket, MeanStd, Prf, RuntimeStats};

/// Intersection and set sizes behind one comparison.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub hits: u64,
    pub inferred: u64,
    pub truth: u64,
}

impl Counts {
    pub fn of(inferred: &BTreeSet<EventId>, truth: &BTreeSet<EventId>) -> Self {
        Self {
            hits: inferred.intersection(truth).count() as u64,
            inferred: inferred.len() as u64,
            truth: truth.len() as u64,
        }
    }

    pub fn add(&mut self, other: Counts) {
        self.hits += other.hits;
        self.inferred += other.inferred;
        self.truth += other.truth;
    }

    pub fn prf(&self) -> Prf {
        let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        Prf::new(ratio(self.hits, self.inferred), ratio(self.hits, self.truth))
    }
}

/// Precision, recall and F1 of `inferred` against `truth`.
pub fn score_mb(inferred: &BTreeSet<EventId>, truth: &BTreeSet<EventId>) -> Prf {
    Counts::of(inferred, truth).prf()
}

/// Which ground-truth events a sequence is scored against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthScope {
    /// Every variable of the label's rule.
    #[default]
    Full,
    /// Rule variables that occur in the sequence.
    Observed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Score only (sequence, label) pairs where the label is on.
    pub positives_only: bool,
    pub scope: TruthScope,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { positives_only: true, scope: TruthScope::Full }
    }
}

/// Score of one (sequence, label) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MbScore {
    pub sequence: usize,
    pub label: LabelId,
    pub prf: Prf,
    pub counts: Counts,
    pub label_true: bool,
    /// False when the label has no ground-truth boundary; such pairs are
    /// counted but left out of every average.
    pub has_truth: bool,
    /// Size of the label's full ground-truth boundary.
    pub truth_len: usize,
}

/// Scores every (sequence, label) pair selected by `opts`.
pub fn score_all(
    seqs: &[LabeledSequence],
    inferred: &[MarkovBoundarySet],
    truth: &MarkovBoundarySet,
    opts: &EvalOptions,
) -> Result<Vec<MbScore>> {
    if seqs.len() != inferred.len() {
        return Err(Error::InvalidConfig(format!(
            "{} sequences but {} discovery results",
            seqs.len(),
            inferred.len()
        )));
    }
    let mut out = Vec::new();
    for (i, (seq, mb)) in seqs.iter().zip(inferred).enumerate() {
        let presence = seq.presence();
        for j in 0..truth.n_labels() {
            let label_true = seq.labels().get(j).copied().unwrap_or(false);
            if opts.positives_only && !label_true {
                continue;
            }
            let full = truth.get(j);
            let scoped: BTreeSet<EventId> = match opts.scope {
                TruthScope::Full => full.clone(),
                TruthScope::Observed => full.intersection(&presence).copied().collect(),
            };
            let has_truth = !scoped.is_empty();
            let counts = if has_truth { Counts::of(mb.get(j), &scoped) } else { Counts::default() };
            out.push(MbScore {
                sequence: i,
                label: j,
                prf: counts.prf(),
                counts,
                label_true,
                has_truth,
                truth_len: full.len(),
            });
        }
    }
    Ok(out)
}

/// Micro, macro and support-weighted averages. Support of a label is its
/// number of scored pairs where the label is on.
pub fn aggregate(scores: &[MbScore], n_labels: usize) -> Result<AggregateReport> {
    if scores.is_empty() {
        return Err(Error::EmptyInput("no scores to aggregate"));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by_key(|s| (s.label, s.sequence));

    let mut micro = Counts::default();
    let mut per_label = Vec::with_capacity(n_labels);
    let mut excluded = 0u64;
    for j in 0..n_labels {
        let mine: Vec<&MbScore> = sorted.iter().filter(|s| s.label == j).collect();
        let scored: Vec<&MbScore> = mine.iter().copied().filter(|s| s.has_truth).collect();
        excluded += (mine.len() - scored.len()) as u64;
        let mut counts = Counts::default();
        for s in &scored {
            counts.add(s.counts);
        }
        micro.add(counts);
        let n = scored.len();
        let mean = |f: fn(&Prf) -> f64| if n == 0 { 0.0 } else { scored.iter().map(|s| f(&s.prf)).sum::<f64>() / n as f64 };
        per_label.push(LabelSummary {
            label: j,
            instances: mine.len() as u64,
            scored: n as u64,
            support: scored.iter().filter(|s| s.label_true).count() as u64,
            has_truth: n > 0,
            mean: Prf { precision: mean(|p| p.precision), recall: mean(|p| p.recall), f1: mean(|p| p.f1) },
            counts,
        });
    }

    let active: Vec<&LabelSummary> = per_label.iter().filter(|l| l.has_truth).collect();
    let macro_ = average(active.iter().map(|l| (1.0, l.mean)));
    let total_support: u64 = active.iter().map(|l| l.support).sum();
    let weighted = if total_support > 0 {
        average(active.iter().map(|l| (l.support as f64, l.mean)))
    } else {
        macro_
    };
    let scored_instances: u64 = active.iter().map(|l| l.scored).sum();

    Ok(AggregateReport {
        instances: scores.len() as u64,
        scored: scored_instances,
        excluded_no_truth: excluded,
        labels_without_truth: per_label.iter().filter(|l| !l.has_truth && l.instances > 0).count() as u64,
        micro: micro.prf(),
        micro_counts: micro,
        macro_avg: macro_,
        weighted,
        per_label,
        by_mb_length: stratify_by_mb_length(&sorted),
        runtime: None,
    })
}

fn average(items: impl Iterator<Item = (f64, Prf)>) -> Prf {
    let mut w = 0.0;
    let (mut p, mut r, mut f) = (0.0, 0.0, 0.0);
    for (wi, m) in items {
        w += wi;
        p += wi * m.precision;
        r += wi * m.recall;
        f += wi * m.f1;
    }
    if w == 0.0 {
        Prf::default()
    } else {
        Prf { precision: p / w, recall: r / w, f1: f / w }
    }
}

/// Mean metrics per ground-truth boundary size, over scored pairs.
pub fn stratify_by_mb_length(scores: &[MbScore]) -> BTreeMap<usize, LengthBucket> {
    let mut acc: BTreeMap<usize, (u64, Prf)> = BTreeMap::new();
    for s in scores.iter().filter(|s| s.has_truth) {
        let e = acc.entry(s.truth_len).or_default();
        e.0 += 1;
        e.1.precision += s.prf.precision;
        e.1.recall += s.prf.recall;
        e.1.f1 += s.prf.f1;
    }
    acc.into_iter()
        .map(|(len, (n, sum))| {
            let d = n as f64;
            (len, LengthBucket { count: n, mean: Prf { precision: sum.precision / d, recall: sum.recall / d, f1: sum.f1 / d } })
        })
        .collect()
}

/// Splits the scored sequences into `folds` contiguous blocks and reports
/// the spread of the averages across blocks.
pub fn fold_report(scores: &[MbScore], n_sequences: usize, n_labels: usize, folds: usize) -> Result<FoldReport> {
    if folds < 1 || folds > n_sequences.max(1) {
        return Err(Error::InvalidConfig(format!("cannot split {n_sequences} sequences into {folds} folds")));
    }
    let mut reports = Vec::with_capacity(folds);
    for f in 0..folds {
        let part: Vec<MbScore> = scores.iter().copied().filter(|s| s.sequence * folds / n_sequences == f).collect();
        if part.is_empty() {
            continue;
        }
        reports.push(aggregate(&part, n_labels)?);
    }
    let spread = |get: fn(&AggregateReport) -> f64| MeanStd::of(&reports.iter().map(get).collect::<Vec<_>>());
    Ok(FoldReport {
        folds: reports.len(),
        micro_f1: spread(|r| r.micro.f1),
        macro_f1: spread(|r| r.macro_avg.f1),
        weighted_f1: spread(|r| r.weighted.f1),
        weighted_precision: spread(|r| r.weighted.precision),
        weighted_recall: spread(|r| r.weighted.recall),
    })
}
