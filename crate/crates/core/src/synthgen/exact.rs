//! Exact conditionals of a [`GeneratorModel`].
//!
//! Labels depend on the presence set of the whole sequence, so `P(Y | prefix)`
//! marginalizes over every continuation. Two routes compute it:
//!
//! * [`ExactOracle`] runs a backward recursion over the state
//!   `(steps emitted, last event, which rule variables have been seen)` once
//!   per label, after which each query is a table lookup.
//! * [`enumerate_label_conditional`] walks every completion explicitly and
//!   evaluates the rule on each full presence set. It is exponential and is
//!   kept as an independent check of the recursion.

use std::collections::BTreeSet;

use crate::density::dist::CategoricalDistribution;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::synthgen::model::{GeneratorModel, LabelSource};
use crate::synthgen::rules::{evaluate_rule, LabelRule};
use crate::types::{EventId, LabelId, BEGIN_MARKER};

/// Default cap on completions (enumeration) or table transitions (recursion).
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 10_000_000;

const MAX_RULE_VARIABLES: usize = 24;

/// Checks the shape of a prefix and returns the number of events in it.
fn check_prefix(model: &GeneratorModel, prefix: &[EventId]) -> Result<usize> {
    match prefix.first() {
        None => return Err(Error::InvalidPrefix("empty prefix".into())),
        Some(&first) if first != BEGIN_MARKER => {
            return Err(Error::InvalidPrefix("prefix must start with the begin marker".into()))
        }
        _ => {}
    }
    let n = model.vocab.len();
    for &e in &prefix[1..] {
        if e >= n {
            return Err(Error::IndexOutOfRange { index: e, size: n });
        }
        if e == BEGIN_MARKER {
            return Err(Error::InvalidPrefix("begin marker inside prefix".into()));
        }
    }
    let steps = prefix.len() - 1;
    if steps > model.length.max_len() || model.length.survival(steps) <= 0.0 {
        return Err(Error::InvalidPrefix(format!("no sequence of this model has {steps} or more events")));
    }
    Ok(steps)
}

/// Backward value table for one rule.
#[derive(Debug, Clone)]
struct RuleTable<F: Scalar> {
    bit_of: Vec<Option<u32>>,
    n_events: usize,
    n_masks: usize,
    values: Vec<F>,
}

impl<F: Scalar> RuleTable<F> {
    fn build(model: &GeneratorModel, rule: &LabelRule, budget: u128) -> Result<Self> {
        let vars = rule.variables();
        if vars.len() > MAX_RULE_VARIABLES {
            return Err(Error::EnumerationTooLarge { needed: 1u128 << vars.len(), budget });
        }
        let n = model.vocab.len();
        let max_len = model.length.max_len();
        let n_masks = 1usize << vars.len();
        let work = (max_len as u128 + 1) * (n as u128) * (n as u128) * n_masks as u128;
        if work > budget {
            return Err(Error::EnumerationTooLarge { needed: work, budget });
        }

        let mut bit_of = vec![None; n];
        for (b, &e) in vars.iter().enumerate() {
            bit_of[e] = Some(b as u32);
        }
        let satisfied: Vec<F> = (0..n_masks)
            .map(|mask| {
                let hit = rule.eval_with(|e| bit_of[e].is_some_and(|b| mask >> b & 1 == 1));
                if hit {
                    F::one()
                } else {
                    F::zero()
                }
            })
            .collect();
        let add = |mask: usize, e: EventId| bit_of[e].map_or(mask, |b| mask | (1 << b));

        let transition: Vec<Vec<F>> = model
            .transition
            .iter()
            .map(|row| row.iter().map(|&p| F::of(p)).collect())
            .collect();
        let hazard: Vec<F> = model.length.hazard().into_iter().map(F::of).collect();
        let stride_t = n * n_masks;
        let mut values = vec![F::zero(); (max_len + 1) * stride_t];
        for t in (0..=max_len).rev() {
            let h = hazard[t];
            for last in 0..n {
                for mask in 0..n_masks {
                    let stop = h * satisfied[mask];
                    let go = if t < max_len && h < F::one() {
                        let next = &values[(t + 1) * stride_t..(t + 2) * stride_t];
                        transition[last]
                            .iter()
                            .enumerate()
                            .filter(|(_, p)| **p > F::zero())
                            .map(|(x, &p)| p * next[x * n_masks + add(mask, x)])
                            .sum::<F>()
                    } else {
                        F::zero()
                    };
                    values[t * stride_t + last * n_masks + mask] = stop + (F::one() - h) * go;
                }
            }
        }
        Ok(Self { bit_of, n_events: n, n_masks, values })
    }

    fn lookup(&self, prefix: &[EventId]) -> F {
        let t = prefix.len() - 1;
        let last = *prefix.last().expect("nonempty prefix");
        let mask = prefix[1..]
            .iter()
            .fold(0usize, |m, &e| self.bit_of[e].map_or(m, |b| m | (1 << b)));
        // Sums of products can drift a few ulps past 1.
        let v = self.values[t * self.n_events * self.n_masks + last * self.n_masks + mask];
        v.max(F::zero()).min(F::one())
    }
}

#[derive(Debug, Clone)]
enum LabelOracle<F: Scalar> {
    Rule(RuleTable<F>),
    Constant(F),
}

/// Exact next-event and label conditionals of a generator model.
#[derive(Debug, Clone)]
pub struct ExactOracle<F: Scalar = f64> {
    model: GeneratorModel,
    labels: Vec<LabelOracle<F>>,
}

impl<F: Scalar> ExactOracle<F> {
    pub fn new(model: GeneratorModel) -> Result<Self> {
        Self::with_budget(model, DEFAULT_ENUMERATION_BUDGET)
    }

    pub fn with_budget(model: GeneratorModel, budget: u128) -> Result<Self> {
        model.validate()?;
        let labels = (0..model.n_labels())
            .map(|j| match model.source(j) {
                LabelSource::Rule(rule) => RuleTable::build(&model, rule, budget).map(LabelOracle::Rule),
                LabelSource::Coin(p) => Ok(LabelOracle::Constant(F::of(p))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { model, labels })
    }

    pub fn model(&self) -> &GeneratorModel {
        &self.model
    }

    /// `P(Y_label = 1 | prefix)`.
    pub fn label_probability(&self, prefix: &[EventId], label: LabelId) -> Result<F> {
        check_prefix(&self.model, prefix)?;
        let oracle = self
            .labels
            .get(label)
            .ok_or(Error::IndexOutOfRange { index: label, size: self.labels.len() })?;
        Ok(self.lookup(oracle, prefix))
    }

    /// `P(Y_j = 1 | prefix)` for every label.
    pub fn label_probabilities(&self, prefix: &[EventId]) -> Result<Vec<F>> {
        check_prefix(&self.model, prefix)?;
        Ok(self.labels.iter().map(|o| self.lookup(o, prefix)).collect())
    }

    fn lookup(&self, oracle: &LabelOracle<F>, prefix: &[EventId]) -> F {
        match oracle {
            LabelOracle::Rule(table) => table.lookup(prefix).max(F::zero()).min(F::one()),
            LabelOracle::Constant(p) => *p,
        }
    }

    /// Distribution of the event after `prefix`: the transition row of its
    /// last element.
    pub fn next_event(&self, prefix: &[EventId]) -> Result<CategoricalDistribution<F>> {
        exact_next_event(&self.model, prefix)
    }
}

/// `P(Y_label = 1 | prefix)` by the backward recursion.
pub fn exact_label_conditional<F: Scalar>(model: &GeneratorModel, prefix: &[EventId], label: LabelId) -> Result<F> {
    exact_label_conditional_with_budget(model, prefix, label, DEFAULT_ENUMERATION_BUDGET)
}

pub fn exact_label_conditional_with_budget<F: Scalar>(
    model: &GeneratorModel,
    prefix: &[EventId],
    label: LabelId,
    budget: u128,
) -> Result<F> {
    check_prefix(model, prefix)?;
    if label >= model.n_labels() {
        return Err(Error::IndexOutOfRange { index: label, size: model.n_labels() });
    }
    match model.source(label) {
        LabelSource::Coin(p) => Ok(F::of(p)),
        LabelSource::Rule(rule) => Ok(RuleTable::<F>::build(model, rule, budget)?.lookup(prefix)),
    }
}

/// `P(Y_label = 1 | prefix)` by walking every completion of every admissible
/// length and evaluating the rule on each completed presence set.
pub fn enumerate_label_conditional<F: Scalar>(
    model: &GeneratorModel,
    prefix: &[EventId],
    label: LabelId,
    budget: u128,
) -> Result<F> {
    let steps = check_prefix(model, prefix)?;
    if label >= model.n_labels() {
        return Err(Error::IndexOutOfRange { index: label, size: model.n_labels() });
    }
    let rule = match model.source(label) {
        LabelSource::Coin(p) => return Ok(F::of(p)),
        LabelSource::Rule(rule) => rule,
    };
    let pmf = model.length.pmf();
    let survival = model.length.survival(steps);
    let branching = (model.vocab.len() - 1) as u128;
    let needed: u128 = (steps..pmf.len())
        .filter(|&l| pmf[l] > 0.0)
        .map(|l| branching.saturating_pow((l - steps) as u32))
        .fold(0u128, u128::saturating_add);
    if needed > budget {
        return Err(Error::EnumerationTooLarge { needed, budget });
    }

    let presence: BTreeSet<EventId> = prefix[1..].iter().copied().collect();
    let last = *prefix.last().expect("checked");
    let mut total = F::zero();
    for (len, &mass) in pmf.iter().enumerate().skip(steps) {
        if mass <= 0.0 {
            continue;
        }
        let hit = walk(model, rule, &presence, last, len - steps, F::one());
        total = total + F::of(mass / survival) * hit;
    }
    Ok(total)
}

/// Probability mass of `remaining`-step completions from `last` that satisfy
/// the rule, scaled by `weight`.
fn walk<F: Scalar>(
    model: &GeneratorModel,
    rule: &LabelRule,
    presence: &BTreeSet<EventId>,
    last: EventId,
    remaining: usize,
    weight: F,
) -> F {
    if remaining == 0 {
        return if evaluate_rule(rule, presence) { weight } else { F::zero() };
    }
    let mut acc = F::zero();
    for next in model.vocab.events() {
        let p = model.row(last)[next];
        if p == 0.0 {
            continue;
        }
        let mut with = presence.clone();
        with.insert(next);
        acc = acc + walk(model, rule, &with, next, remaining - 1, weight * F::of(p));
    }
    acc
}

/// The transition row of the prefix's last event.
pub fn exact_next_event<F: Scalar>(model: &GeneratorModel, prefix: &[EventId]) -> Result<CategoricalDistribution<F>> {
    match prefix.first() {
        None => return Err(Error::InvalidPrefix("empty prefix".into())),
        Some(&first) if first != BEGIN_MARKER => {
            return Err(Error::InvalidPrefix("prefix must start with the begin marker".into()))
        }
        _ => {}
    }
    let n = model.vocab.len();
    if let Some(&bad) = prefix.iter().find(|&&e| e >= n) {
        return Err(Error::IndexOutOfRange { index: bad, size: n });
    }
    let last = *prefix.last().expect("nonempty");
    CategoricalDistribution::new(model.row(last).iter().map(|&p| F::of(p)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::model::{CoinLabel, LengthSpec};
    use crate::synthgen::rules::Literal;
    use crate::types::{EventVocabulary, LabelCatalog};
    use proptest::prelude::*;

    fn uniform_ab(len: usize) -> GeneratorModel {
        GeneratorModel::new(
            EventVocabulary::with_marker("BOS", ["a", "b"]).unwrap(),
            LabelCatalog::new(vec!["y".into()]).unwrap(),
            GeneratorModel::uniform_transition(3),
            LengthSpec::Fixed(len),
            vec![LabelRule::all_of(0, [Literal::pos(1)]).unwrap()],
            vec![],
            1,
        )
        .unwrap()
    }

    #[test]
    fn satisfied_prefix_is_certain() {
        let m = uniform_ab(2);
        assert_eq!(exact_label_conditional::<f64>(&m, &[0, 1], 0).unwrap(), 1.0);
    }

    #[test]
    fn one_step_left() {
        // completions {a, b}; one of two contains `a`
        let m = uniform_ab(2);
        assert_eq!(exact_label_conditional::<f64>(&m, &[0, 2], 0).unwrap(), 0.5);
        assert_eq!(enumerate_label_conditional::<f64>(&m, &[0, 2], 0, 100).unwrap(), 0.5);
    }

    #[test]
    fn empty_prefix_two_steps_left() {
        // aa, ab, ba contain `a`; bb does not
        let m = uniform_ab(2);
        assert_eq!(exact_label_conditional::<f64>(&m, &[0], 0).unwrap(), 0.75);
        assert_eq!(enumerate_label_conditional::<f64>(&m, &[0], 0, 100).unwrap(), 0.75);
    }

    #[test]
    fn full_prefix_matches_rule() {
        let m = uniform_ab(2);
        assert_eq!(exact_label_conditional::<f64>(&m, &[0, 2, 2], 0).unwrap(), 0.0);
        assert_eq!(exact_label_conditional::<f64>(&m, &[0, 2, 1], 0).unwrap(), 1.0);
    }

    #[test]
    fn prefix_validation() {
        let m = uniform_ab(2);
        assert!(exact_label_conditional::<f64>(&m, &[], 0).is_err());
        assert!(exact_label_conditional::<f64>(&m, &[1], 0).is_err());
        assert!(exact_label_conditional::<f64>(&m, &[0, 7], 0).is_err());
        assert!(exact_label_conditional::<f64>(&m, &[0, 1, 1, 1], 0).is_err(), "longer than L");
        assert!(exact_label_conditional::<f64>(&m, &[0, 1], 3).is_err());
    }

    #[test]
    fn budget_is_enforced() {
        let m = uniform_ab(12);
        assert!(matches!(
            enumerate_label_conditional::<f64>(&m, &[0], 0, 1000),
            Err(Error::EnumerationTooLarge { needed: 4096, budget: 1000 })
        ));
        assert!(matches!(
            ExactOracle::<f64>::with_budget(m, 10),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn next_event_rows() {
        let mut m = uniform_ab(3);
        m.transition = vec![vec![0.0, 0.5, 0.5], vec![0.0, 0.0, 1.0], vec![0.0, 0.7, 0.3]];
        let d = exact_next_event::<f64>(&m, &[0, 1]).unwrap();
        assert_eq!(d.probs(), &[0.0, 0.0, 1.0]);
        let d = exact_next_event::<f64>(&m, &[0, 2]).unwrap();
        assert_eq!(d.probs(), &[0.0, 0.7, 0.3]);
        let d = exact_next_event::<f64>(&m, &[0]).unwrap();
        assert_eq!(d.probs(), &[0.0, 0.5, 0.5]);
    }

    #[test]
    fn coin_labels_are_constant() {
        let mut m = uniform_ab(3);
        m.catalog = LabelCatalog::new(vec!["y".into(), "c".into()]).unwrap();
        m.coins.push(CoinLabel { label: 1, p: 0.3 });
        let o = ExactOracle::<f64>::new(m).unwrap();
        assert_eq!(o.label_probability(&[0, 1, 2], 1).unwrap(), 0.3);
        assert_eq!(o.label_probabilities(&[0]).unwrap()[1], 0.3);
    }

    /// Random small model used by the property tests below.
    fn arb_model() -> impl Strategy<Value = GeneratorModel> {
        (2usize..5, 1usize..5, any::<u64>()).prop_flat_map(|(n_events, len, seed)| {
            let n = n_events + 1;
            let rows = prop::collection::vec(prop::collection::vec(0.0f64..1.0, n_events), n);
            let lits = prop::collection::vec(
                prop::collection::vec((1..=n_events, any::<bool>()), 1..3),
                1..3,
            );
            let variable = prop::bool::ANY;
            (rows, lits, variable).prop_map(move |(rows, clauses, variable)| {
                let transition = rows
                    .into_iter()
                    .map(|r| {
                        let w: Vec<f64> = r.iter().map(|x| x + 0.05).collect();
                        let s: f64 = w.iter().sum();
                        std::iter::once(0.0).chain(w.iter().map(|x| x / s)).collect()
                    })
                    .collect();
                let rule = LabelRule::new(
                    0,
                    clauses
                        .into_iter()
                        .map(|c| c.into_iter().map(|(e, neg)| Literal { event: e, negated: neg }).collect())
                        .collect(),
                )
                .unwrap();
                let length = if variable && len > 1 {
                    LengthSpec::Distribution(vec![(len - 1, 0.4), (len, 0.6)])
                } else {
                    LengthSpec::Fixed(len)
                };
                let names: Vec<String> = (1..=n_events).map(|i| format!("e{i}")).collect();
                GeneratorModel::new(
                    EventVocabulary::with_marker("BOS", names).unwrap(),
                    LabelCatalog::new(vec!["y".into()]).unwrap(),
                    transition,
                    length,
                    vec![rule],
                    vec![],
                    seed,
                )
                .unwrap()
            })
        })
    }

    fn arb_prefix(m: &GeneratorModel, raw: &[usize]) -> Vec<EventId> {
        let n_events = m.vocab.len() - 1;
        let max = m.length.max_len();
        let len = raw.len().min(max);
        std::iter::once(0).chain(raw[..len].iter().map(|r| 1 + r % n_events)).collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        /// The recursion agrees with brute-force enumeration.
        #[test]
        fn recursion_matches_enumeration(m in arb_model(), raw in prop::collection::vec(0usize..8, 0..5)) {
            let prefix = arb_prefix(&m, &raw);
            let steps = prefix.len() - 1;
            prop_assume!(m.length.survival(steps) > 0.0);
            let fast = exact_label_conditional::<f64>(&m, &prefix, 0).unwrap();
            let slow = enumerate_label_conditional::<f64>(&m, &prefix, 0, DEFAULT_ENUMERATION_BUDGET).unwrap();
            prop_assert!((fast - slow).abs() < 1e-12, "{} vs {}", fast, slow);
            prop_assert!((0.0..=1.0).contains(&fast));
        }

        /// Sum over x of P(next = x | prefix) * P(Y | prefix + x) equals P(Y | prefix)
        /// whenever the sequence cannot end right after the prefix.
        #[test]
        fn chain_rule_consistency(m in arb_model(), raw in prop::collection::vec(0usize..8, 0..5)) {
            let prefix = arb_prefix(&m, &raw);
            let steps = prefix.len() - 1;
            prop_assume!(m.length.survival(steps) > 0.0);
            prop_assume!(steps < m.length.max_len());
            let oracle = ExactOracle::<f64>::new(m.clone()).unwrap();
            let here = oracle.label_probability(&prefix, 0).unwrap();
            let next = oracle.next_event(&prefix).unwrap();
            let h = m.length.hazard()[steps];
            let now = if evaluate_rule(&m.rules[0], &prefix[1..].iter().copied().collect()) { 1.0 } else { 0.0 };
            let mut ahead = 0.0;
            for x in m.vocab.events() {
                let mut longer = prefix.clone();
                longer.push(x);
                ahead += next.probs()[x] * oracle.label_probability(&longer, 0).unwrap();
            }
            prop_assert!((here - (h * now + (1.0 - h) * ahead)).abs() < 1e-9);
        }
    }
}
