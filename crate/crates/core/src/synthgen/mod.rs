//! Synthetic multi-label event sequences with known ground truth.
//!
//! Events follow a first-order Markov chain; each label is either a boolean
//! rule over the presence set of the whole sequence or an independent coin.

pub mod exact;
pub mod model;
pub mod random;
pub mod rules;
pub mod sample;
pub mod tiered;

pub use exact::{
    enumerate_label_conditional, exact_label_conditional, exact_label_conditional_with_budget, exact_next_event,
    ExactOracle, DEFAULT_ENUMERATION_BUDGET,
};
pub use model::{CoinLabel, GeneratorModel, LabelSource, LengthSpec, ModelFile};
pub use random::{random_model, RandomModelSpec};
pub use rules::{evaluate_rule, true_markov_boundary, LabelRule, Literal};
pub use sample::{sample_dataset, sample_split};
pub use tiered::{rules_from, tiered_model, TieredModelSpec};

use std::collections::BTreeMap;

use crate::error::Result;
use crate::types::MarkovBoundarySet;

/// Ground-truth boundaries of a model. Coin labels have no entry.
pub fn model_truth(model: &GeneratorModel) -> MarkovBoundarySet {
    true_markov_boundary(&model.rules, model.n_labels())
}

/// `{label: [symbols]}` for the labels that have a rule.
pub fn truth_file(model: &GeneratorModel) -> Result<BTreeMap<String, Vec<String>>> {
    let mb = model_truth(model);
    let mut out = BTreeMap::new();
    for rule in &model.rules {
        let symbols = mb
            .get(rule.label)
            .iter()
            .map(|&e| model.vocab.symbol(e).map(str::to_string))
            .collect::<Result<Vec<_>>>()?;
        out.insert(model.catalog.name(rule.label)?.to_string(), symbols);
    }
    Ok(out)
}
