//! Random generator models for experiment suites.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::rng;
use crate::synthgen::model::{CoinLabel, GeneratorModel, LengthSpec};
use crate::synthgen::rules::{LabelRule, Literal};
use crate::types::{EventVocabulary, LabelCatalog};

/// Knobs for [`random_model`].
#[derive(Debug, Clone)]
pub struct RandomModelSpec {
    /// Real events, excluding the begin marker.
    pub n_events: usize,
    pub length: LengthSpec,
    pub n_rule_labels: usize,
    pub n_coin_labels: usize,
    /// Literals per rule, drawn uniformly from this inclusive range.
    pub literals: (usize, usize),
    /// Probability that a literal is negated.
    pub negation_rate: f64,
    /// Probability that a literal joins the previous clause as a disjunct.
    pub disjunction_rate: f64,
    /// Dirichlet concentration of the transition rows; small values give
    /// peaked rows.
    pub concentration: f64,
    pub seed: u64,
}

impl Default for RandomModelSpec {
    fn default() -> Self {
        Self {
            n_events: 6,
            length: LengthSpec::Fixed(6),
            n_rule_labels: 2,
            n_coin_labels: 0,
            literals: (1, 3),
            negation_rate: 0.2,
            disjunction_rate: 0.3,
            concentration: 1.0,
            seed: 0,
        }
    }
}

/// Draws a Markov-chain model with random rules. Distinct rule labels use
/// disjoint literal sets when enough events exist.
pub fn random_model(spec: &RandomModelSpec) -> Result<GeneratorModel> {
    if spec.n_events < 1 || spec.literals.0 < 1 || spec.literals.0 > spec.literals.1 {
        return Err(Error::InvalidModel("random model needs events and a valid literal range".into()));
    }
    if spec.literals.1 > spec.n_events {
        return Err(Error::InvalidModel("more literals requested than events exist".into()));
    }
    let mut rng = rng::stream(&[0x52414e44, spec.seed]);
    let n = spec.n_events + 1;
    let gamma = Gamma::new(spec.concentration, 1.0).map_err(|e| Error::InvalidModel(e.to_string()))?;
    let transition = (0..n)
        .map(|_| {
            let w: Vec<f64> = (0..spec.n_events).map(|_| gamma.sample(&mut rng).max(1e-12)).collect();
            let s: f64 = w.iter().sum();
            std::iter::once(0.0).chain(w.into_iter().map(|x| x / s)).collect()
        })
        .collect();

    let mut events: Vec<usize> = (1..n).collect();
    events.shuffle(&mut rng);
    let mut cursor = 0usize;
    let mut rules = Vec::with_capacity(spec.n_rule_labels);
    for label in 0..spec.n_rule_labels {
        let k = rng.random_range(spec.literals.0..=spec.literals.1);
        if cursor + k > events.len() {
            events.shuffle(&mut rng);
            cursor = 0;
        }
        let vars = &events[cursor..cursor + k];
        cursor += k;
        let mut clauses: Vec<Vec<Literal>> = Vec::new();
        for &e in vars {
            let lit = Literal { event: e, negated: rng.random_bool(spec.negation_rate) };
            match clauses.last_mut() {
                Some(last) if rng.random_bool(spec.disjunction_rate) => last.push(lit),
                _ => clauses.push(vec![lit]),
            }
        }
        rules.push(LabelRule::new(label, clauses)?);
    }
    let coins = (0..spec.n_coin_labels)
        .map(|i| CoinLabel { label: spec.n_rule_labels + i, p: rng.random_range(0.1..0.5) })
        .collect();

    let names: Vec<String> = (1..n).map(|i| format!("e{i}")).collect();
    let labels: Vec<String> = (0..spec.n_rule_labels)
        .map(|j| format!("y{}", j + 1))
        .chain((0..spec.n_coin_labels).map(|j| format!("coin{}", j + 1)))
        .collect();
    GeneratorModel::new(
        EventVocabulary::with_marker("<bos>", names)?,
        LabelCatalog::new(labels)?,
        transition,
        spec.length.clone(),
        rules,
        coins,
        spec.seed,
    )
}
