//! Backend that answers with the exact conditionals of a generator model.

use std::sync::Arc;

use crate::density::{BackendMetadata, CategoricalDistribution, EstimatorPair, EventModel, LabelModel, LabelProbabilities};
use crate::error::Result;
use crate::scalar::Scalar;
use crate::synthgen::{ExactOracle, GeneratorModel, DEFAULT_ENUMERATION_BUDGET};
use crate::types::EventId;

struct OracleEvents<F: Scalar>(Arc<ExactOracle<F>>);
struct OracleLabels<F: Scalar>(Arc<ExactOracle<F>>);

impl<F: Scalar> EventModel<F> for OracleEvents<F> {
    fn next_event(&self, prefix: &[EventId]) -> Result<CategoricalDistribution<F>> {
        self.0.next_event(prefix)
    }
}

impl<F: Scalar> LabelModel<F> for OracleLabels<F> {
    fn labels(&self, prefix: &[EventId]) -> Result<LabelProbabilities<F>> {
        LabelProbabilities::new(self.0.label_probabilities(prefix)?)
    }
}

pub fn oracle_pair<F: Scalar>(model: &GeneratorModel) -> Result<EstimatorPair<F>> {
    oracle_pair_with_budget(model, DEFAULT_ENUMERATION_BUDGET)
}

pub fn oracle_pair_with_budget<F: Scalar>(model: &GeneratorModel, budget: u128) -> Result<EstimatorPair<F>> {
    let oracle = Arc::new(ExactOracle::<F>::with_budget(model.clone(), budget)?);
    let metadata = BackendMetadata {
        backend: "oracle".into(),
        vocab_size: model.vocab.len(),
        n_labels: model.n_labels(),
        corpus_size: None,
        label_support: None,
    };
    Ok(EstimatorPair::new(Arc::new(OracleEvents(oracle.clone())), Arc::new(OracleLabels(oracle)), metadata))
}
