use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{EventId, EventVocabulary, LabelCatalog, LabelId, MarkovBoundarySet, BEGIN_MARKER};

/// An event, possibly negated. A literal holds when the event is present in
/// the sequence (or absent, if negated).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub event: EventId,
    pub negated: bool,
}

impl Literal {
    pub fn pos(event: EventId) -> Self {
        Self { event, negated: false }
    }

    pub fn neg(event: EventId) -> Self {
        Self { event, negated: true }
    }

    #[inline]
    pub fn holds(&self, present: bool) -> bool {
        present != self.negated
    }

    /// Parses `"a"` or `"!a"`.
    pub fn parse(text: &str, vocab: &EventVocabulary) -> Result<Self> {
        let (negated, name) = match text.strip_prefix('!') {
            Some(rest) => (true, rest.trim()),
            None => (false, text.trim()),
        };
        Ok(Self { event: vocab.lookup(name)?, negated })
    }

    pub fn render(&self, vocab: &EventVocabulary) -> Result<String> {
        let name = vocab.symbol(self.event)?;
        Ok(if self.negated { format!("!{name}") } else { name.to_string() })
    }
}

/// Conjunction of disjunctive clauses over event presence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRule {
    pub label: LabelId,
    pub clauses: Vec<Vec<Literal>>,
}

impl LabelRule {
    pub fn new(label: LabelId, clauses: Vec<Vec<Literal>>) -> Result<Self> {
        if clauses.is_empty() {
            return Err(Error::InvalidModel(format!("rule for label {label} has no clauses")));
        }
        if clauses.iter().any(Vec::is_empty) {
            return Err(Error::InvalidModel(format!("rule for label {label} has an empty clause")));
        }
        if clauses.iter().flatten().any(|l| l.event == BEGIN_MARKER) {
            return Err(Error::InvalidModel(format!("rule for label {label} references the begin marker")));
        }
        Ok(Self { label, clauses })
    }

    /// Rule that is true iff every listed literal holds.
    pub fn all_of(label: LabelId, literals: impl IntoIterator<Item = Literal>) -> Result<Self> {
        Self::new(label, literals.into_iter().map(|l| vec![l]).collect())
    }

    /// Distinct events mentioned by any literal, in first-mention order.
    pub fn variables(&self) -> Vec<EventId> {
        let mut seen = BTreeSet::new();
        self.clauses
            .iter()
            .flatten()
            .filter(|l| seen.insert(l.event))
            .map(|l| l.event)
            .collect()
    }

    pub fn literal_count(&self) -> usize {
        self.clauses.iter().map(Vec::len).sum()
    }

    /// Evaluates the rule given a presence predicate.
    pub fn eval_with(&self, present: impl Fn(EventId) -> bool) -> bool {
        self.clauses.iter().all(|clause| clause.iter().any(|l| l.holds(present(l.event))))
    }

    pub fn display<'a>(&'a self, vocab: &'a EventVocabulary, catalog: &'a LabelCatalog) -> RuleDisplay<'a> {
        RuleDisplay { rule: self, vocab, catalog }
    }
}

pub struct RuleDisplay<'a> {
    rule: &'a LabelRule,
    vocab: &'a EventVocabulary,
    catalog: &'a LabelCatalog,
}

impl fmt::Display for RuleDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = self.catalog.name(self.rule.label).unwrap_or("?");
        write!(f, "{name} = ")?;
        for (i, clause) in self.rule.clauses.iter().enumerate() {
            if i > 0 {
                write!(f, " & ")?;
            }
            let lits: Vec<String> = clause
                .iter()
                .map(|l| l.render(self.vocab).unwrap_or_else(|_| "?".into()))
                .collect();
            if lits.len() == 1 {
                write!(f, "{}", lits[0])?;
            } else {
                write!(f, "({})", lits.join(" | "))?;
            }
        }
        Ok(())
    }
}

/// True iff every clause has at least one satisfied literal.
pub fn evaluate_rule(rule: &LabelRule, presence: &BTreeSet<EventId>) -> bool {
    rule.eval_with(|e| presence.contains(&e))
}

/// Ground-truth boundary: every event named by a label's rule.
pub fn true_markov_boundary(rules: &[LabelRule], n_labels: usize) -> MarkovBoundarySet {
    let mut mb = MarkovBoundarySet::new(n_labels);
    for rule in rules {
        for lit in rule.clauses.iter().flatten() {
            mb.insert(rule.label, lit.event);
        }
    }
    mb
}
