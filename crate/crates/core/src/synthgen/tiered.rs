//! Models with events in frequency tiers: a frequent background, a band of
//! medium-rate events that rules are usually written over, and optional rare
//! events with fixed per-step rates.

use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::rng;
use crate::synthgen::model::{GeneratorModel, LengthSpec};
use crate::synthgen::rules::{LabelRule, Literal};
use crate::types::{EventVocabulary, LabelCatalog};

#[derive(Debug, Clone)]
pub struct TieredModelSpec {
    /// Background events `b1..`, sharing `background_mass` per step.
    pub n_background: usize,
    pub background_mass: f64,
    /// Medium events `m1..`, sharing what background and rare events leave.
    pub n_medium: usize,
    /// Per-step rate of each rare event `q1..`.
    pub rare_rates: Vec<f64>,
    pub length: LengthSpec,
    /// Dirichlet concentration of the per-row jitter inside each tier; larger
    /// is closer to a fixed i.i.d. mixture.
    pub jitter: f64,
    /// `(label, clauses)` where each clause is a list of literals such as `"m1"` or `"!m2"`.
    pub rules: Vec<(String, Vec<Vec<String>>)>,
    pub seed: u64,
}

impl Default for TieredModelSpec {
    fn default() -> Self {
        Self {
            n_background: 4,
            background_mass: 0.6,
            n_medium: 8,
            rare_rates: vec![],
            length: LengthSpec::Fixed(30),
            jitter: 20.0,
            rules: vec![("y1".into(), vec![vec!["m1".into()]])],
            seed: 0,
        }
    }
}

/// `(label, [[literal]])` rule list from string slices.
pub fn rules_from(spec: &[(&str, &[&[&str]])]) -> Vec<(String, Vec<Vec<String>>)> {
    spec.iter()
        .map(|(label, clauses)| {
            (label.to_string(), clauses.iter().map(|c| c.iter().map(|l| l.to_string()).collect()).collect())
        })
        .collect()
}

pub fn tiered_model(spec: &TieredModelSpec) -> Result<GeneratorModel> {
    let rare_mass: f64 = spec.rare_rates.iter().sum();
    let medium_mass = 1.0 - spec.background_mass - rare_mass;
    if spec.n_background == 0 || spec.n_medium == 0 || !(medium_mass > 0.0) || !(spec.background_mass > 0.0) {
        return Err(Error::InvalidModel("tier masses must be positive and sum below one".into()));
    }
    let gamma = Gamma::new(spec.jitter, 1.0).map_err(|e| Error::InvalidModel(e.to_string()))?;
    let mut r = rng::stream(&[0x54494552, spec.seed]);
    let mut tier = |n: usize, mass: f64| -> Vec<f64> {
        let w: Vec<f64> = (0..n).map(|_| gamma.sample(&mut r).max(1e-12)).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| mass * x / s).collect()
    };
    let n_symbols = 1 + spec.n_background + spec.n_medium + spec.rare_rates.len();
    let transition = (0..n_symbols)
        .map(|_| {
            let mut row = vec![0.0];
            row.extend(tier(spec.n_background, spec.background_mass));
            row.extend(tier(spec.n_medium, medium_mass));
            row.extend(spec.rare_rates.iter().copied());
            let s: f64 = row.iter().sum();
            row.into_iter().map(|x| x / s).collect()
        })
        .collect();

    let names: Vec<String> = (1..=spec.n_background)
        .map(|i| format!("b{i}"))
        .chain((1..=spec.n_medium).map(|i| format!("m{i}")))
        .chain((1..=spec.rare_rates.len()).map(|i| format!("q{i}")))
        .collect();
    let vocab = EventVocabulary::with_marker("<bos>", names)?;
    let catalog = LabelCatalog::new(spec.rules.iter().map(|(l, _)| l.clone()).collect())?;
    let rules = spec
        .rules
        .iter()
        .enumerate()
        .map(|(j, (_, clauses))| {
            let clauses = clauses
                .iter()
                .map(|c| c.iter().map(|l| Literal::parse(l, &vocab)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            LabelRule::new(j, clauses)
        })
        .collect::<Result<Vec<_>>>()?;
    GeneratorModel::new(vocab, catalog, transition, spec.length.clone(), rules, vec![], spec.seed)
}
