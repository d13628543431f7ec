use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Normalized distribution over the event vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct CategoricalDistribution<F: Scalar = f64> {
    probs: Vec<F>,
}

/// Allowed deviation of a distribution's total mass from 1.
pub fn mass_tolerance<F: Scalar>(n: usize) -> F {
    F::of(1e-6) + F::epsilon() * F::of_count(n as u64 * 4)
}

impl<F: Scalar> CategoricalDistribution<F> {
    pub fn new(probs: Vec<F>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidPrefix("empty distribution".into()));
        }
        if probs.iter().any(|p| !(*p >= F::zero()) || !p.is_finite()) {
            return Err(Error::InvalidPrefix("distribution has a negative or non-finite entry".into()));
        }
        let total: F = probs.iter().copied().sum();
        if (total - F::one()).abs() > mass_tolerance::<F>(probs.len()) {
            return Err(Error::InvalidPrefix(format!("distribution sums to {total}")));
        }
        Ok(Self { probs })
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(weights: Vec<F>) -> Result<Self> {
        let total: F = weights.iter().copied().sum();
        if !(total > F::zero()) {
            return Err(Error::InvalidPrefix("weights have no mass".into()));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn point_mass(n: usize, at: usize) -> Self {
        let mut probs = vec![F::zero(); n];
        probs[at] = F::one();
        Self { probs }
    }

    pub fn probs(&self) -> &[F] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total_variation(&self, other: &Self) -> F {
        let half = F::of(0.5);
        half * self.probs.iter().zip(&other.probs).map(|(a, b)| (*a - *b).abs()).sum::<F>()
    }
}

/// Independent Bernoulli probabilities, one per label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct LabelProbabilities<F: Scalar = f64> {
    probs: Vec<F>,
}

impl<F: Scalar> LabelProbabilities<F> {
    pub fn new(probs: Vec<F>) -> Result<Self> {
        if let Some(p) = probs.iter().find(|p| !(**p >= F::zero() && **p <= F::one())) {
            return Err(Error::InvalidPrefix(format!("label probability {p} outside [0, 1]")));
        }
        Ok(Self { probs })
    }

    /// Clamps every entry into `[eps, 1 - eps]`.
    pub fn clamped(&self, eps: F) -> Self {
        let hi = F::one() - eps;
        Self { probs: self.probs.iter().map(|&p| p.max(eps).min(hi)).collect() }
    }

    pub fn probs(&self) -> &[F] {
        &self.probs
    }

    pub fn get(&self, label: usize) -> F {
        self.probs[label]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn categorical_validation() {
        assert!(CategoricalDistribution::new(vec![0.5f64, 0.5]).is_ok());
        assert!(CategoricalDistribution::new(vec![0.5f64, 0.4]).is_err());
        assert!(CategoricalDistribution::new(vec![1.5f64, -0.5]).is_err());
        let d = CategoricalDistribution::from_weights(vec![1.0f32, 3.0]).unwrap();
        assert_eq!(d.probs(), &[0.25, 0.75]);
        let p = CategoricalDistribution::<f64>::point_mass(3, 1);
        assert_eq!(p.total_variation(&CategoricalDistribution::point_mass(3, 2)), 1.0);
    }

    #[test]
    fn clamp_bounds() {
        let p = LabelProbabilities::new(vec![0.0f64, 1.0, 0.4]).unwrap().clamped(1e-6);
        assert_eq!(p.probs(), &[1e-6, 1.0 - 1e-6, 0.4]);
        assert!(LabelProbabilities::new(vec![1.2f64]).is_err());
    }
}
