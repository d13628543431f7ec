use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{self, domain};
use crate::synthgen::model::{GeneratorModel, LabelSource, LengthSpec};
use crate::synthgen::rules::evaluate_rule;
use crate::types::{EventOccurrence, LabeledSequence, BEGIN_MARKER};

/// Draws `n` sequences from `model` using its own seed.
pub fn sample_dataset(model: &GeneratorModel, n: usize) -> Result<Vec<LabeledSequence>> {
    sample_split(model, n, 0)
}

/// Draws `n` sequences from an independent split of the model's stream, so a
/// training corpus and an evaluation set can come from the same model.
///
/// Sequence `i` of split `s` depends only on `(seed, s, i)`.
pub fn sample_split(model: &GeneratorModel, n: usize, split: u64) -> Result<Vec<LabeledSequence>> {
    if n == 0 {
        return Err(Error::EmptyInput("dataset size must be at least 1"));
    }
    model.validate()?;
    let rows = model
        .transition
        .iter()
        .map(|row| WeightedIndex::new(row.iter().copied()).ok())
        .collect::<Vec<_>>();
    let lengths = match &model.length {
        LengthSpec::Fixed(_) => None,
        LengthSpec::Distribution(d) => Some((
            d.iter().map(|&(l, _)| l).collect::<Vec<_>>(),
            WeightedIndex::new(d.iter().map(|&(_, p)| p)).map_err(|e| Error::InvalidModel(e.to_string()))?,
        )),
    };

    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(&[domain::GENERATE, model.seed, split, i as u64]);
            let len = match (&model.length, &lengths) {
                (LengthSpec::Fixed(l), _) => *l,
                (_, Some((ls, w))) => ls[w.sample(&mut rng)],
                _ => unreachable!(),
            };
            let mut prev = BEGIN_MARKER;
            let mut time = 0.0f64;
            let mut events = Vec::with_capacity(len);
            for step in 1..=len {
                let row = rows[prev]
                    .as_ref()
                    .ok_or_else(|| Error::InvalidModel(format!("transition row {prev} has no mass")))?;
                let event = row.sample(&mut rng);
                if step > 1 {
                    let gap: f64 = rng.sample(Exp1);
                    time += gap;
                }
                events.push(EventOccurrence { step, time, event });
                prev = event;
            }
            let presence = events.iter().map(|o| o.event).collect();
            let mut coin_rng = rng::stream(&[domain::COIN, model.seed, split, i as u64]);
            let labels = (0..model.n_labels())
                .map(|j| match model.source(j) {
                    LabelSource::Rule(rule) => evaluate_rule(rule, &presence),
                    LabelSource::Coin(p) => coin_rng.random_bool(p),
                })
                .collect();
            LabeledSequence::new(events, labels)
        })
        .collect()
}
