//! Density estimation behind the discovery engine: one model for the next
//! event and one for the label probabilities, both conditioned on a prefix
//! that starts with the begin marker.

pub mod dist;
pub mod ngram;
pub mod oracle;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use dist::{CategoricalDistribution, LabelProbabilities};
pub use ngram::{fit_ngram, NGramConfig, NGramCounts, NGramEventModel, NGramFile, NGramLabelModel};
pub use oracle::{oracle_pair, oracle_pair_with_budget};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::types::{EventId, BEGIN_MARKER};

/// Next-event distribution given a prefix.
pub trait EventModel<F: Scalar>: Send + Sync {
    fn next_event(&self, prefix: &[EventId]) -> Result<CategoricalDistribution<F>>;
}

/// Per-label probability that the label is on, given a prefix.
pub trait LabelModel<F: Scalar>: Send + Sync {
    fn labels(&self, prefix: &[EventId]) -> Result<LabelProbabilities<F>>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendMetadata {
    pub backend: String,
    pub vocab_size: usize,
    pub n_labels: usize,
    /// Sequences seen in training, when the backend was trained.
    pub corpus_size: Option<u64>,
    /// Per-label count of positive training sequences.
    pub label_support: Option<Vec<u64>>,
}

/// The event model and label model used together by the engine.
#[derive(Clone)]
pub struct EstimatorPair<F: Scalar = f64> {
    pub event_model: Arc<dyn EventModel<F>>,
    pub label_model: Arc<dyn LabelModel<F>>,
    pub metadata: BackendMetadata,
}

impl<F: Scalar> std::fmt::Debug for EstimatorPair<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EstimatorPair").field("metadata", &self.metadata).finish_non_exhaustive()
    }
}

impl<F: Scalar> EstimatorPair<F> {
    pub fn new(
        event_model: Arc<dyn EventModel<F>>,
        label_model: Arc<dyn LabelModel<F>>,
        metadata: BackendMetadata,
    ) -> Self {
        Self { event_model, label_model, metadata }
    }

    pub fn vocab_size(&self) -> usize {
        self.metadata.vocab_size
    }

    pub fn n_labels(&self) -> usize {
        self.metadata.n_labels
    }

    fn check(&self, prefix: &[EventId]) -> Result<()> {
        if prefix.first() != Some(&BEGIN_MARKER) {
            return Err(Error::InvalidPrefix("prefix must start with the begin marker".into()));
        }
        let n = self.metadata.vocab_size;
        if let Some(&bad) = prefix.iter().find(|&&e| e >= n) {
            return Err(Error::UnknownSymbol(format!("event index {bad} (vocabulary size {n})")));
        }
        Ok(())
    }

    pub fn query_event(&self, prefix: &[EventId]) -> Result<CategoricalDistribution<F>> {
        self.check(prefix)?;
        self.event_model.next_event(prefix)
    }

    pub fn query_labels(&self, prefix: &[EventId]) -> Result<LabelProbabilities<F>> {
        self.check(prefix)?;
        self.label_model.labels(prefix)
    }
}
