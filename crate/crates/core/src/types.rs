//! Domain types shared by the generator, the density backends, the engine
//! and the evaluation code.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Index into an [`EventVocabulary`].
pub type EventId = usize;
/// Index into a [`LabelCatalog`].
pub type LabelId = usize;

/// Index of the reserved begin-of-sequence marker.
pub const BEGIN_MARKER: EventId = 0;

/// Ordered set of event types. Index 0 is the begin marker that starts every
/// prefix handed to a density model; it never occurs inside a sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventVocabulary {
    symbols: Vec<String>,
    index: HashMap<String, EventId>,
}

impl EventVocabulary {
    /// Builds a vocabulary whose first symbol is the begin marker.
    pub fn new(symbols: Vec<String>) -> Result<Self> {
        if symbols.len() < 2 {
            return Err(Error::InvalidVocabulary(format!(
                "need the begin marker plus at least one event, got {} symbols",
                symbols.len()
            )));
        }
        let mut index = HashMap::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            if index.insert(s.clone(), i).is_some() {
                return Err(Error::InvalidVocabulary(format!("duplicate symbol `{s}`")));
            }
        }
        Ok(Self { symbols, index })
    }

    /// Vocabulary `[marker, e1, e2, ...]` from plain event names.
    pub fn with_marker<S: Into<String>>(marker: &str, events: impl IntoIterator<Item = S>) -> Result<Self> {
        let mut symbols = vec![marker.to_string()];
        symbols.extend(events.into_iter().map(Into::into));
        Self::new(symbols)
    }

    pub fn lookup(&self, symbol: &str) -> Result<EventId> {
        self.index
            .get(symbol)
            .copied()
            .ok_or_else(|| Error::UnknownSymbol(symbol.to_string()))
    }

    pub fn symbol(&self, id: EventId) -> Result<&str> {
        self.symbols
            .get(id)
            .map(String::as_str)
            .ok_or(Error::IndexOutOfRange { index: id, size: self.symbols.len() })
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn marker(&self) -> &str {
        &self.symbols[BEGIN_MARKER]
    }

    /// Indices of real events (everything but the marker).
    pub fn events(&self) -> std::ops::Range<EventId> {
        1..self.symbols.len()
    }
}

impl Serialize for EventVocabulary {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.symbols.serialize(s)
    }
}

impl<'de> Deserialize<'de> for EventVocabulary {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let symbols = Vec::<String>::deserialize(d)?;
        Self::new(symbols).map_err(serde::de::Error::custom)
    }
}

/// Ordered set of label names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelCatalog {
    names: Vec<String>,
    index: HashMap<String, LabelId>,
}

impl LabelCatalog {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidCatalog("at least one label is required".into()));
        }
        let mut index = HashMap::with_capacity(names.len());
        for (i, s) in names.iter().enumerate() {
            if index.insert(s.clone(), i).is_some() {
                return Err(Error::InvalidCatalog(format!("duplicate label `{s}`")));
            }
        }
        Ok(Self { names, index })
    }

    pub fn lookup(&self, name: &str) -> Result<LabelId> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownSymbol(name.to_string()))
    }

    pub fn name(&self, id: LabelId) -> Result<&str> {
        self.names
            .get(id)
            .map(String::as_str)
            .ok_or(Error::IndexOutOfRange { index: id, size: self.names.len() })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl Serialize for LabelCatalog {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.names.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LabelCatalog {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let names = Vec::<String>::deserialize(d)?;
        Self::new(names).map_err(serde::de::Error::custom)
    }
}

/// One event occurrence. Steps are 1-based; step 0 is the begin marker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventOccurrence {
    pub step: usize,
    pub time: f64,
    pub event: EventId,
}

/// An event sequence with the binary label vector observed after its last event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSequence {
    events: Vec<EventOccurrence>,
    labels: Vec<bool>,
}

impl LabeledSequence {
    pub fn new(events: Vec<EventOccurrence>, labels: Vec<bool>) -> Result<Self> {
        if events.is_empty() {
            return Err(Error::InvalidSequence("a sequence needs at least one event".into()));
        }
        let mut prev_time = 0.0f64;
        for (i, occ) in events.iter().enumerate() {
            if occ.step != i + 1 {
                return Err(Error::InvalidSequence(format!(
                    "steps must be consecutive from 1, found step {} at position {}",
                    occ.step,
                    i + 1
                )));
            }
            if !(occ.time >= 0.0) || !occ.time.is_finite() {
                return Err(Error::InvalidSequence(format!("step {} has invalid time {}", occ.step, occ.time)));
            }
            if occ.time < prev_time {
                return Err(Error::InvalidSequence(format!(
                    "time decreases at step {} ({} < {})",
                    occ.step, occ.time, prev_time
                )));
            }
            if occ.event == BEGIN_MARKER {
                return Err(Error::InvalidSequence(format!("begin marker at step {}", occ.step)));
            }
            prev_time = occ.time;
        }
        Ok(Self { events, labels })
    }

    /// Sequence with unit-spaced times `1, 2, ...`.
    pub fn from_events(events: &[EventId], labels: Vec<bool>) -> Result<Self> {
        let occ = events
            .iter()
            .enumerate()
            .map(|(i, &event)| EventOccurrence { step: i + 1, time: (i + 1) as f64, event })
            .collect();
        Self::new(occ, labels)
    }

    /// Checks every event index against a vocabulary and the label vector
    /// length against a catalog.
    pub fn validate(&self, vocab: &EventVocabulary, catalog: &LabelCatalog) -> Result<()> {
        for occ in &self.events {
            if occ.event >= vocab.len() {
                return Err(Error::IndexOutOfRange { index: occ.event, size: vocab.len() });
            }
        }
        if self.labels.len() != catalog.len() {
            return Err(Error::InvalidSequence(format!(
                "label vector has length {}, catalog has {}",
                self.labels.len(),
                catalog.len()
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn occurrences(&self) -> &[EventOccurrence] {
        &self.events
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn event_at(&self, step: usize) -> Option<EventId> {
        step.checked_sub(1).and_then(|i| self.events.get(i)).map(|o| o.event)
    }

    /// `[BEGIN_MARKER, e1, ..., eL]`; token index equals step.
    pub fn tokens(&self) -> Vec<EventId> {
        std::iter::once(BEGIN_MARKER).chain(self.events.iter().map(|o| o.event)).collect()
    }

    /// Distinct event types that occur anywhere in the sequence.
    pub fn presence(&self) -> BTreeSet<EventId> {
        self.events.iter().map(|o| o.event).collect()
    }

    /// Time at which the labels are observed.
    pub fn label_time(&self) -> f64 {
        self.events.last().map(|o| o.time).unwrap_or(0.0)
    }
}

/// Per-label sets of event types.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MarkovBoundarySet {
    sets: Vec<BTreeSet<EventId>>,
}

impl MarkovBoundarySet {
    pub fn new(n_labels: usize) -> Self {
        Self { sets: vec![BTreeSet::new(); n_labels] }
    }

    /// Builds from explicit sets; the begin marker is dropped.
    pub fn from_sets(sets: Vec<BTreeSet<EventId>>) -> Self {
        let sets = sets
            .into_iter()
            .map(|mut s| {
                s.remove(&BEGIN_MARKER);
                s
            })
            .collect();
        Self { sets }
    }

    pub fn insert(&mut self, label: LabelId, event: EventId) {
        if event != BEGIN_MARKER {
            self.sets[label].insert(event);
        }
    }

    pub fn get(&self, label: LabelId) -> &BTreeSet<EventId> {
        &self.sets[label]
    }

    pub fn n_labels(&self) -> usize {
        self.sets.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (LabelId, &BTreeSet<EventId>)> {
        self.sets.iter().enumerate()
    }
}

/// Node of a [`CausalGraph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GraphNode {
    Event { step: usize, event: EventId },
    Label { label: LabelId },
}

/// Edge from an event occurrence to a label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct CausalEdge<F: Scalar = f64> {
    pub step: usize,
    pub event: EventId,
    pub label: LabelId,
    pub cmi: F,
    pub indicator_mean: F,
    pub indicator_std: F,
}

/// Event-to-label graph recovered from one sequence. Label nodes sit one
/// step after the final event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct CausalGraph<F: Scalar = f64> {
    pub events: Vec<EventOccurrence>,
    pub labels: Vec<LabelId>,
    pub label_step: usize,
    pub edges: Vec<CausalEdge<F>>,
}

impl<F: Scalar> CausalGraph<F> {
    pub fn new(seq: &LabeledSequence, labels: Vec<LabelId>) -> Self {
        Self {
            events: seq.occurrences().to_vec(),
            labels,
            label_step: seq.len() + 1,
            edges: Vec::new(),
        }
    }

    /// Adds an edge, enforcing temporal precedence.
    pub fn add_edge(&mut self, edge: CausalEdge<F>) -> Result<()> {
        if edge.step == 0 || edge.step >= self.label_step {
            return Err(Error::InvalidSequence(format!(
                "edge source step {} must precede label step {}",
                edge.step, self.label_step
            )));
        }
        self.edges.push(edge);
        Ok(())
    }

    pub fn nodes(&self) -> Vec<GraphNode> {
        self.events
            .iter()
            .map(|o| GraphNode::Event { step: o.step, event: o.event })
            .chain(self.labels.iter().map(|&label| GraphNode::Label { label }))
            .collect()
    }
}
