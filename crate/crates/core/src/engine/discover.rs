//! Thresholding CMI into per-label Markov boundaries, and result export.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::density::EstimatorPair;
use crate::engine::cmi::{estimate_cmi, CmiMatrix};
use crate::engine::config::{SamplingConfig, ThresholdConfig};
use crate::error::{Error, Result};
use crate::scalar::{self, Scalar};
use crate::types::{CausalEdge, CausalGraph, EventId, EventVocabulary, LabelCatalog, LabelId, LabeledSequence, MarkovBoundarySet};

/// `mean + k * sample_std` of one label's CMI values.
pub fn dynamic_threshold<F: Scalar>(values: &[F], cfg: &ThresholdConfig) -> Result<F> {
    if values.len() < 2 {
        return Err(Error::DegenerateVector(values.len()));
    }
    Ok(scalar::mean(values) + F::of(cfg.z_coefficient) * scalar::sample_std(values))
}

/// Threshold that falls back to the mean for short vectors. The flag is set
/// when the fallback was used.
pub fn threshold_or_mean<F: Scalar>(values: &[F], cfg: &ThresholdConfig) -> (F, bool) {
    match dynamic_threshold(values, cfg) {
        Ok(t) => (t, false),
        Err(_) => (scalar::mean(values), true),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct LabelDiscovery<F: Scalar = f64> {
    pub label: LabelId,
    pub threshold: F,
    /// Fewer than two scored steps; the threshold is the plain mean.
    pub degenerate: bool,
    pub edges: Vec<CausalEdge<F>>,
    /// Distinct event types at the retained steps.
    pub events: BTreeSet<EventId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct DiscoveryResult<F: Scalar = f64> {
    pub len: usize,
    pub labels: Vec<LabelDiscovery<F>>,
    pub sampling: SamplingConfig,
    pub threshold: ThresholdConfig,
    pub cmi: CmiMatrix<F>,
}

impl<F: Scalar> DiscoveryResult<F> {
    pub fn markov_boundary(&self, label: LabelId) -> &BTreeSet<EventId> {
        &self.labels[label].events
    }

    pub fn boundaries(&self) -> MarkovBoundarySet {
        MarkovBoundarySet::from_sets(self.labels.iter().map(|l| l.events.clone()).collect())
    }

    pub fn graph(&self, seq: &LabeledSequence) -> Result<CausalGraph<F>> {
        let mut g = CausalGraph::new(seq, (0..self.labels.len()).collect());
        for l in &self.labels {
            for e in &l.edges {
                g.add_edge(*e)?;
            }
        }
        Ok(g)
    }

    /// `{label: {events: [symbol], edges: [{pos, event, cmi, ind_mean, ind_std}], threshold}}`
    pub fn to_json(&self, vocab: &EventVocabulary, catalog: &LabelCatalog) -> Result<Value> {
        let mut out = Map::new();
        for l in &self.labels {
            let events = l.events.iter().map(|&e| vocab.symbol(e).map(Value::from)).collect::<Result<Vec<_>>>()?;
            let edges = l
                .edges
                .iter()
                .map(|e| {
                    Ok(json!({
                        "pos": e.step,
                        "event": vocab.symbol(e.event)?,
                        "cmi": e.cmi.as_f64(),
                        "ind_mean": e.indicator_mean.as_f64(),
                        "ind_std": e.indicator_std.as_f64(),
                    }))
                })
                .collect::<Result<Vec<_>>>()?;
            out.insert(
                catalog.name(l.label)?.to_string(),
                json!({ "events": events, "edges": edges, "threshold": l.threshold.as_f64() }),
            );
        }
        Ok(Value::Object(out))
    }

    /// Graphviz rendering: the event chain, one node per label, and retained
    /// edges colored by indicator sign with width scaled by CMI.
    pub fn to_dot(&self, seq: &LabeledSequence, vocab: &EventVocabulary, catalog: &LabelCatalog) -> Result<String> {
        let mut s = String::new();
        let max_cmi = self
            .labels
            .iter()
            .flat_map(|l| l.edges.iter().map(|e| e.cmi.as_f64()))
            .fold(0.0f64, f64::max);
        s.push_str("digraph oscar {\n  rankdir=LR;\n  node [fontname=\"Helvetica\"];\n");
        for o in seq.occurrences() {
            let name = vocab.symbol(o.event)?;
            let _ = writeln!(s, "  e{} [shape=box, label={}];", o.step, quote(&format!("{}: {}", o.step, name)));
        }
        for w in seq.occurrences().windows(2) {
            let _ = writeln!(s, "  e{} -> e{} [style=dotted, arrowhead=none];", w[0].step, w[1].step);
        }
        for l in &self.labels {
            let name = catalog.name(l.label)?;
            let on = seq.labels().get(l.label).copied().unwrap_or(false);
            let fill = if on { "lightgoldenrod1" } else { "gray90" };
            let _ = writeln!(s, "  y{} [shape=ellipse, style=filled, fillcolor={fill}, label={}];", l.label, quote(name));
        }
        for l in &self.labels {
            for e in &l.edges {
                let color = if e.indicator_mean.as_f64() >= 0.0 { "firebrick" } else { "royalblue" };
                let width = if max_cmi > 0.0 { 1.0 + 3.0 * e.cmi.as_f64() / max_cmi } else { 1.0 };
                let _ = writeln!(
                    s,
                    "  e{} -> y{} [color={color}, penwidth={width:.3}, label=\"{:.4}\"];",
                    e.step,
                    l.label,
                    e.cmi.as_f64()
                );
            }
        }
        s.push_str("}\n");
        Ok(s)
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Applies per-label thresholds to an estimated matrix.
pub fn select<F: Scalar>(
    seq: &LabeledSequence,
    cmi: CmiMatrix<F>,
    sampling: &SamplingConfig,
    threshold: &ThresholdConfig,
) -> DiscoveryResult<F> {
    let floor = F::of(threshold.min_cmi);
    let tokens = seq.tokens();
    let labels = (0..cmi.n_labels)
        .map(|j| {
            let column = cmi.column(j);
            let (theta, degenerate) = threshold_or_mean(&column, threshold);
            let mut edges = Vec::new();
            let mut events = BTreeSet::new();
            for (r, &v) in column.iter().enumerate() {
                if v >= theta && v > floor {
                    let step = cmi.context_floor + r;
                    edges.push(CausalEdge {
                        step,
                        event: tokens[step],
                        label: j,
                        cmi: v,
                        indicator_mean: cmi.indicator_mean[r][j],
                        indicator_std: cmi.indicator_std[r][j],
                    });
                    events.insert(tokens[step]);
                }
            }
            LabelDiscovery { label: j, threshold: theta, degenerate, edges, events }
        })
        .collect();
    DiscoveryResult { len: seq.len(), labels, sampling: *sampling, threshold: *threshold, cmi }
}

/// Markov boundary of every label for one sequence.
pub fn discover<F: Scalar>(
    pair: &EstimatorPair<F>,
    seq: &LabeledSequence,
    sampling: &SamplingConfig,
    threshold: &ThresholdConfig,
) -> Result<DiscoveryResult<F>> {
    threshold.validate()?;
    let cmi = estimate_cmi(pair, seq, sampling)?;
    Ok(select(seq, cmi, sampling, threshold))
}

/// [`discover`] over many sequences, in input order. A failing sequence
/// yields an error in its slot without affecting the others.
pub fn discover_batch<F: Scalar>(
    pair: &EstimatorPair<F>,
    seqs: &[LabeledSequence],
    sampling: &SamplingConfig,
    threshold: &ThresholdConfig,
) -> Vec<Result<DiscoveryResult<F>>> {
    seqs.par_iter().map(|s| discover(pair, s, sampling, threshold)).collect()
}
