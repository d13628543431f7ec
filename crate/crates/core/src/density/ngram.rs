//! Count-based backend: additive-smoothed n-gram next-event model and a label
//! model keyed by the set of distinct events in a trailing window.

use std::collections::HashMap;
use std::marker::PhantomData;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::density::{BackendMetadata, CategoricalDistribution, EstimatorPair, EventModel, LabelModel, LabelProbabilities};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::types::{EventId, LabeledSequence, BEGIN_MARKER};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NGramConfig {
    /// Next-event model conditions on the last `order - 1` tokens.
    pub order: usize,
    /// Label model conditions on the distinct events among the last
    /// `label_window` events.
    pub label_window: usize,
    /// Additive smoothing mass.
    pub alpha: f64,
}

impl NGramConfig {
    /// `label_window` defaults to `order`.
    pub fn new(order: usize, alpha: f64) -> Self {
        Self { order, label_window: order, alpha }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.order < 1 {
            problems.push("order must be at least 1".to_string());
        }
        if self.label_window < 1 {
            problems.push("label_window must be at least 1".to_string());
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            problems.push(format!("alpha must be positive, got {}", self.alpha));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems.join("; ")))
        }
    }
}

impl Default for NGramConfig {
    fn default() -> Self {
        Self::new(2, 0.5)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
struct LabelCell {
    positives: Vec<u64>,
    total: u64,
}

/// Fitted count tables.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramCounts {
    pub config: NGramConfig,
    pub vocab_size: usize,
    pub n_labels: usize,
    pub n_sequences: u64,
    /// Positive training sequences per label.
    pub label_support: Vec<u64>,
    /// Context (up to `order - 1` tokens) to next-event counts over the vocabulary.
    events: HashMap<Vec<EventId>, Vec<u64>>,
    /// Presence signature (sorted distinct events) to label counts.
    labels: HashMap<Vec<EventId>, LabelCell>,
}

fn signature(prefix: &[EventId], window: usize) -> Vec<EventId> {
    let start = prefix.len().saturating_sub(window);
    let mut sig: Vec<EventId> = prefix[start..].iter().copied().filter(|&e| e != BEGIN_MARKER).collect();
    sig.sort_unstable();
    sig.dedup();
    sig
}

impl NGramCounts {
    pub fn fit(corpus: &[LabeledSequence], vocab_size: usize, n_labels: usize, config: NGramConfig) -> Result<Self> {
        config.validate()?;
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut events: HashMap<Vec<EventId>, Vec<u64>> = HashMap::new();
        let mut labels: HashMap<Vec<EventId>, LabelCell> = HashMap::new();
        let mut label_support = vec![0u64; n_labels];
        for seq in corpus {
            if seq.labels().len() != n_labels {
                return Err(Error::InvalidSequence(format!(
                    "label vector of length {} for {n_labels} labels",
                    seq.labels().len()
                )));
            }
            let tokens = seq.tokens();
            if let Some(&bad) = tokens.iter().find(|&&e| e >= vocab_size) {
                return Err(Error::IndexOutOfRange { index: bad, size: vocab_size });
            }
            for (j, &on) in seq.labels().iter().enumerate() {
                label_support[j] += on as u64;
            }
            for i in 1..tokens.len() {
                for k in 0..=(config.order - 1).min(i) {
                    let ctx = tokens[i - k..i].to_vec();
                    events.entry(ctx).or_insert_with(|| vec![0; vocab_size])[tokens[i]] += 1;
                }
            }
            for t in 0..tokens.len() {
                let cell = labels
                    .entry(signature(&tokens[..=t], config.label_window))
                    .or_insert_with(|| LabelCell { positives: vec![0; n_labels], total: 0 });
                cell.total += 1;
                for (j, &on) in seq.labels().iter().enumerate() {
                    cell.positives[j] += on as u64;
                }
            }
        }
        Ok(Self {
            config,
            vocab_size,
            n_labels,
            n_sequences: corpus.len() as u64,
            label_support,
            events,
            labels,
        })
    }

    /// Counts for the longest seen suffix of the context.
    fn event_counts(&self, prefix: &[EventId]) -> &[u64] {
        let longest = (self.config.order - 1).min(prefix.len());
        for k in (0..=longest).rev() {
            if let Some(c) = self.events.get(&prefix[prefix.len() - k..]) {
                if c.iter().any(|&x| x > 0) {
                    return c;
                }
            }
        }
        self.events.get(&[][..]).expect("unigram counts exist for a nonempty corpus")
    }

    pub fn next_event<F: Scalar>(&self, prefix: &[EventId]) -> Result<CategoricalDistribution<F>> {
        let counts = self.event_counts(prefix);
        let alpha = F::of(self.config.alpha);
        let total: u64 = counts.iter().sum();
        let denom = F::of_count(total) + alpha * F::of_count(self.vocab_size as u64 - 1);
        let probs = counts
            .iter()
            .enumerate()
            .map(|(x, &c)| if x == BEGIN_MARKER { F::zero() } else { (F::of_count(c) + alpha) / denom })
            .collect();
        CategoricalDistribution::new(probs)
    }

    pub fn labels<F: Scalar>(&self, prefix: &[EventId]) -> Result<LabelProbabilities<F>> {
        let alpha = F::of(self.config.alpha);
        let two_alpha = alpha + alpha;
        let probs = match self.labels.get(&signature(prefix, self.config.label_window)) {
            Some(cell) => cell
                .positives
                .iter()
                .map(|&p| (F::of_count(p) + alpha) / (F::of_count(cell.total) + two_alpha))
                .collect(),
            None => self
                .label_support
                .iter()
                .map(|&p| (F::of_count(p) + alpha) / (F::of_count(self.n_sequences) + two_alpha))
                .collect(),
        };
        LabelProbabilities::new(probs)
    }

    /// Whether the label model has seen this prefix's signature.
    pub fn has_signature(&self, prefix: &[EventId]) -> bool {
        self.labels.contains_key(&signature(prefix, self.config.label_window))
    }

    pub fn to_file(&self) -> NGramFile {
        let mut events: Vec<EventEntry> = self
            .events
            .iter()
            .flat_map(|(ctx, counts)| {
                counts
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| c > 0)
                    .map(|(next, &count)| EventEntry { context: ctx.clone(), next, count })
            })
            .collect();
        events.sort_by(|a, b| (&a.context, a.next).cmp(&(&b.context, b.next)));
        let mut labels: Vec<LabelEntry> = self
            .labels
            .iter()
            .map(|(sig, cell)| LabelEntry { signature: sig.clone(), total: cell.total, positives: cell.positives.clone() })
            .collect();
        labels.sort_by(|a, b| a.signature.cmp(&b.signature));
        NGramFile {
            format: "oscar-ngram".into(),
            version: FORMAT_VERSION,
            config: self.config,
            vocab_size: self.vocab_size,
            n_labels: self.n_labels,
            n_sequences: self.n_sequences,
            label_support: self.label_support.clone(),
            events,
            labels,
        }
    }

    pub fn from_file(file: NGramFile) -> Result<Self> {
        if file.version != FORMAT_VERSION {
            return Err(Error::InvalidConfig(format!("unsupported n-gram format version {}", file.version)));
        }
        file.config.validate()?;
        let mut events: HashMap<Vec<EventId>, Vec<u64>> = HashMap::new();
        for e in file.events {
            if e.next >= file.vocab_size || e.context.len() >= file.config.order {
                return Err(Error::InvalidConfig("n-gram event entry out of range".into()));
            }
            events.entry(e.context).or_insert_with(|| vec![0; file.vocab_size])[e.next] = e.count;
        }
        let mut labels = HashMap::new();
        for l in file.labels {
            if l.positives.len() != file.n_labels {
                return Err(Error::InvalidConfig("n-gram label entry has the wrong width".into()));
            }
            labels.insert(l.signature, LabelCell { positives: l.positives, total: l.total });
        }
        if !events.contains_key(&Vec::new()) {
            return Err(Error::EmptyCorpus);
        }
        Ok(Self {
            config: file.config,
            vocab_size: file.vocab_size,
            n_labels: file.n_labels,
            n_sequences: file.n_sequences,
            label_support: file.label_support,
            events,
            labels,
        })
    }

    pub fn into_pair<F: Scalar>(self) -> EstimatorPair<F> {
        let metadata = BackendMetadata {
            backend: "ngram".into(),
            vocab_size: self.vocab_size,
            n_labels: self.n_labels,
            corpus_size: Some(self.n_sequences),
            label_support: Some(self.label_support.clone()),
        };
        let counts = Arc::new(self);
        EstimatorPair::new(
            Arc::new(NGramEventModel::<F> { counts: counts.clone(), _scalar: PhantomData }),
            Arc::new(NGramLabelModel::<F> { counts, _scalar: PhantomData }),
            metadata,
        )
    }
}

/// Serialized form of [`NGramCounts`]: sorted entry lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NGramFile {
    pub format: String,
    pub version: u32,
    pub config: NGramConfig,
    pub vocab_size: usize,
    pub n_labels: usize,
    pub n_sequences: u64,
    pub label_support: Vec<u64>,
    pub events: Vec<EventEntry>,
    pub labels: Vec<LabelEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventEntry {
    pub context: Vec<EventId>,
    pub next: EventId,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelEntry {
    pub signature: Vec<EventId>,
    pub total: u64,
    pub positives: Vec<u64>,
}

pub struct NGramEventModel<F: Scalar> {
    counts: Arc<NGramCounts>,
    _scalar: PhantomData<fn() -> F>,
}

pub struct NGramLabelModel<F: Scalar> {
    counts: Arc<NGramCounts>,
    _scalar: PhantomData<fn() -> F>,
}

impl<F: Scalar> EventModel<F> for NGramEventModel<F> {
    fn next_event(&self, prefix: &[EventId]) -> Result<CategoricalDistribution<F>> {
        self.counts.next_event(prefix)
    }
}

impl<F: Scalar> LabelModel<F> for NGramLabelModel<F> {
    fn labels(&self, prefix: &[EventId]) -> Result<LabelProbabilities<F>> {
        self.counts.labels(prefix)
    }
}

/// Fits both count models on `corpus`. The vocabulary size is taken as one
/// past the largest event index in the corpus unless the caller fits through
/// [`NGramCounts::fit`] with an explicit size.
pub fn fit_ngram<F: Scalar>(
    corpus: &[LabeledSequence],
    vocab_size: usize,
    n_labels: usize,
    config: NGramConfig,
) -> Result<EstimatorPair<F>> {
    Ok(NGramCounts::fit(corpus, vocab_size, n_labels, config)?.into_pair())
}
