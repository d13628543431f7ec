use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synthgen::rules::{LabelRule, Literal};
use crate::types::{EventId, EventVocabulary, LabelCatalog, LabelId, BEGIN_MARKER};

const ROW_TOLERANCE: f64 = 1e-9;

/// Sequence length law.
#[derive(Debug, Clone, PartialEq)]
pub enum LengthSpec {
    Fixed(usize),
    /// `(length, probability)` pairs.
    Distribution(Vec<(usize, f64)>),
}

impl LengthSpec {
    pub fn max_len(&self) -> usize {
        match self {
            Self::Fixed(l) => *l,
            Self::Distribution(d) => d.iter().map(|&(l, _)| l).max().unwrap_or(0),
        }
    }

    /// `P(L = t)` for `t = 0..=max_len`.
    pub fn pmf(&self) -> Vec<f64> {
        let mut pmf = vec![0.0; self.max_len() + 1];
        match self {
            Self::Fixed(l) => pmf[*l] = 1.0,
            Self::Distribution(d) => {
                for &(l, p) in d {
                    pmf[l] += p;
                }
            }
        }
        pmf
    }

    /// `P(L = t | L >= t)`; 1 where the survival mass is zero.
    pub fn hazard(&self) -> Vec<f64> {
        let pmf = self.pmf();
        let mut survival = 0.0;
        let mut hazard = vec![1.0; pmf.len()];
        for t in (0..pmf.len()).rev() {
            survival += pmf[t];
            if survival > 0.0 {
                hazard[t] = pmf[t] / survival;
            }
        }
        hazard
    }

    /// `P(L >= t)`.
    pub fn survival(&self, t: usize) -> f64 {
        self.pmf().iter().skip(t).sum()
    }

    fn validate(&self) -> Result<()> {
        match self {
            Self::Fixed(0) => Err(Error::InvalidModel("sequence length must be at least 1".into())),
            Self::Fixed(_) => Ok(()),
            Self::Distribution(d) => {
                if d.is_empty() {
                    return Err(Error::InvalidModel("empty length distribution".into()));
                }
                if d.iter().any(|&(l, p)| l == 0 || !(p >= 0.0)) {
                    return Err(Error::InvalidModel("length distribution needs lengths >= 1 and nonnegative mass".into()));
                }
                let total: f64 = d.iter().map(|&(_, p)| p).sum();
                if (total - 1.0).abs() > ROW_TOLERANCE {
                    return Err(Error::InvalidModel(format!("length distribution sums to {total}")));
                }
                Ok(())
            }
        }
    }
}

/// Label drawn from an independent coin instead of a rule; it has no known
/// ground-truth boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoinLabel {
    pub label: LabelId,
    pub p: f64,
}

/// How a label's value is produced.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelSource<'a> {
    Rule(&'a LabelRule),
    Coin(f64),
}

/// First-order Markov event process plus boolean label rules.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorModel {
    pub vocab: EventVocabulary,
    pub catalog: LabelCatalog,
    /// Row `i` is the distribution of the next event after event `i`; row 0
    /// follows the begin marker.
    pub transition: Vec<Vec<f64>>,
    pub length: LengthSpec,
    pub rules: Vec<LabelRule>,
    pub coins: Vec<CoinLabel>,
    pub seed: u64,
}

impl GeneratorModel {
    pub fn new(
        vocab: EventVocabulary,
        catalog: LabelCatalog,
        transition: Vec<Vec<f64>>,
        length: LengthSpec,
        rules: Vec<LabelRule>,
        coins: Vec<CoinLabel>,
        seed: u64,
    ) -> Result<Self> {
        let model = Self { vocab, catalog, transition, length, rules, coins, seed };
        model.validate()?;
        Ok(model)
    }

    /// Every row is uniform over the real events.
    pub fn uniform_transition(n_symbols: usize) -> Vec<Vec<f64>> {
        let p = 1.0 / (n_symbols - 1) as f64;
        (0..n_symbols)
            .map(|_| (0..n_symbols).map(|j| if j == BEGIN_MARKER { 0.0 } else { p }).collect())
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vocab.len();
        if self.transition.len() != n {
            return Err(Error::InvalidModel(format!("transition has {} rows, vocabulary has {n}", self.transition.len())));
        }
        for (i, row) in self.transition.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidModel(format!("transition row {i} has {} columns", row.len())));
            }
            if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                return Err(Error::InvalidModel(format!("transition row {i} has a negative or non-finite entry")));
            }
            if row[BEGIN_MARKER] != 0.0 {
                return Err(Error::InvalidModel(format!("transition row {i} re-emits the begin marker")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::InvalidModel(format!("transition row {i} sums to {sum}")));
            }
        }
        self.length.validate()?;

        let mut sourced = vec![0usize; self.catalog.len()];
        for rule in &self.rules {
            if rule.label >= self.catalog.len() {
                return Err(Error::InvalidModel(format!("rule for unknown label index {}", rule.label)));
            }
            if rule.clauses.is_empty() || rule.clauses.iter().any(Vec::is_empty) {
                return Err(Error::InvalidModel(format!("rule for label {} has an empty clause list", rule.label)));
            }
            for lit in rule.clauses.iter().flatten() {
                if lit.event == BEGIN_MARKER || lit.event >= n {
                    return Err(Error::InvalidModel(format!("rule literal references event index {}", lit.event)));
                }
            }
            sourced[rule.label] += 1;
        }
        for coin in &self.coins {
            if coin.label >= self.catalog.len() {
                return Err(Error::InvalidModel(format!("coin for unknown label index {}", coin.label)));
            }
            if !(0.0..=1.0).contains(&coin.p) {
                return Err(Error::InvalidModel(format!("coin probability {} outside [0, 1]", coin.p)));
            }
            sourced[coin.label] += 1;
        }
        if let Some(j) = sourced.iter().position(|&c| c != 1) {
            return Err(Error::InvalidModel(format!(
                "label `{}` must have exactly one rule or coin, has {}",
                self.catalog.names()[j],
                sourced[j]
            )));
        }
        Ok(())
    }

    pub fn n_labels(&self) -> usize {
        self.catalog.len()
    }

    pub fn source(&self, label: LabelId) -> LabelSource<'_> {
        if let Some(rule) = self.rules.iter().find(|r| r.label == label) {
            return LabelSource::Rule(rule);
        }
        let coin = self.coins.iter().find(|c| c.label == label).expect("validated model");
        LabelSource::Coin(coin.p)
    }

    pub fn row(&self, event: EventId) -> &[f64] {
        &self.transition[event]
    }

    pub fn to_file(&self) -> Result<ModelFile> {
        let rules = self
            .rules
            .iter()
            .map(|r| {
                Ok(RuleFile {
                    label: self.catalog.name(r.label)?.to_string(),
                    clauses: r
                        .clauses
                        .iter()
                        .map(|c| c.iter().map(|l| l.render(&self.vocab)).collect::<Result<Vec<_>>>())
                        .collect::<Result<Vec<_>>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let coins = self
            .coins
            .iter()
            .map(|c| Ok(CoinFile { label: self.catalog.name(c.label)?.to_string(), p: c.p }))
            .collect::<Result<Vec<_>>>()?;
        Ok(ModelFile {
            vocab: self.vocab.symbols().to_vec(),
            labels: self.catalog.names().to_vec(),
            transition: self.transition.clone(),
            length: match &self.length {
                LengthSpec::Fixed(l) => LengthFile::Fixed(*l),
                LengthSpec::Distribution(d) => LengthFile::Distribution { distribution: d.clone() },
            },
            rules,
            coins,
            seed: self.seed,
        })
    }
}

/// On-disk form of a [`GeneratorModel`]; events and labels are referenced by
/// name and literals are written `"a"` or `"!a"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub vocab: Vec<String>,
    pub labels: Vec<String>,
    pub transition: Vec<Vec<f64>>,
    pub length: LengthFile,
    pub rules: Vec<RuleFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coins: Vec<CoinFile>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LengthFile {
    Fixed(usize),
    Distribution { distribution: Vec<(usize, f64)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleFile {
    pub label: String,
    pub clauses: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoinFile {
    pub label: String,
    pub p: f64,
}

impl ModelFile {
    pub fn into_model(self) -> Result<GeneratorModel> {
        let vocab = EventVocabulary::new(self.vocab)?;
        let catalog = LabelCatalog::new(self.labels)?;
        let rules = self
            .rules
            .iter()
            .map(|r| {
                let clauses = r
                    .clauses
                    .iter()
                    .map(|c| c.iter().map(|s| Literal::parse(s, &vocab)).collect::<Result<Vec<_>>>())
                    .collect::<Result<Vec<_>>>()?;
                LabelRule::new(catalog.lookup(&r.label)?, clauses)
            })
            .collect::<Result<Vec<_>>>()?;
        let coins = self
            .coins
            .iter()
            .map(|c| Ok(CoinLabel { label: catalog.lookup(&c.label)?, p: c.p }))
            .collect::<Result<Vec<_>>>()?;
        let length = match self.length {
            LengthFile::Fixed(l) => LengthSpec::Fixed(l),
            LengthFile::Distribution { distribution } => LengthSpec::Distribution(distribution),
        };
        GeneratorModel::new(vocab, catalog, self.transition, length, rules, coins, self.seed)
    }
}
