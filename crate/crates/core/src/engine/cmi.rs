//! Monte-Carlo conditional mutual information between each observed event
//! and each label, with the signed change in label probability alongside.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{EstimatorPair, LabelProbabilities};
use crate::engine::config::SamplingConfig;
use crate::engine::sampling::{check_length, sample_particles, ParticleSet};
use crate::error::Result;
use crate::scalar::{self, Scalar};
use crate::types::{LabelId, LabeledSequence};

/// `KL(Bernoulli(after) || Bernoulli(before))` in nats. Inputs must already
/// lie strictly inside (0, 1).
#[inline]
pub fn bernoulli_kl<F: Scalar>(after: F, before: F) -> F {
    let one = F::one();
    after * (after / before).ln() + (one - after) * ((one - after) / (one - before)).ln()
}

/// Information gain on `label` from `before` to `after`, both clamped into
/// `[eps, 1 - eps]` first.
pub fn info_gain<F: Scalar>(
    before: &LabelProbabilities<F>,
    after: &LabelProbabilities<F>,
    label: LabelId,
    eps: F,
) -> F {
    let lo = eps;
    let hi = F::one() - eps;
    bernoulli_kl(after.get(label).max(lo).min(hi), before.get(label).max(lo).min(hi))
}

/// Largest value [`info_gain`] can take for a given clamp.
pub fn info_gain_cap<F: Scalar>(eps: F) -> F {
    ((F::one() - eps) / eps).ln()
}

/// Per (step, label) CMI and indicator statistics for steps `context_floor..=len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct CmiMatrix<F: Scalar = f64> {
    pub context_floor: usize,
    pub len: usize,
    pub n_labels: usize,
    pub n_particles: usize,
    pub eps: F,
    /// `values[i - context_floor][label]`
    pub values: Vec<Vec<F>>,
    pub indicator_mean: Vec<Vec<F>>,
    pub indicator_std: Vec<Vec<F>>,
}

impl<F: Scalar> CmiMatrix<F> {
    pub fn steps(&self) -> std::ops::RangeInclusive<usize> {
        self.context_floor..=self.len
    }

    fn row(&self, step: usize) -> Option<usize> {
        (step >= self.context_floor && step <= self.len).then(|| step - self.context_floor)
    }

    pub fn get(&self, step: usize, label: LabelId) -> Option<F> {
        self.row(step).and_then(|r| self.values[r].get(label).copied())
    }

    pub fn indicator(&self, step: usize, label: LabelId) -> Option<(F, F)> {
        let r = self.row(step)?;
        Some((*self.indicator_mean[r].get(label)?, self.indicator_std[r][label]))
    }

    /// CMI of every scored step for one label.
    pub fn column(&self, label: LabelId) -> Vec<F> {
        self.values.iter().map(|row| row[label]).collect()
    }
}

struct ParticleTerms<F> {
    gain: Vec<Vec<F>>,
    diff: Vec<Vec<F>>,
}

fn particle_terms<F: Scalar>(pair: &EstimatorPair<F>, z: &[usize], c: usize, eps: F) -> Result<ParticleTerms<F>> {
    let lo = eps;
    let hi = F::one() - eps;
    let clamp = |p: LabelProbabilities<F>| -> Vec<F> { p.probs().iter().map(|&x| x.max(lo).min(hi)).collect() };
    let len = z.len() - 1;
    let mut prev = clamp(pair.query_labels(&z[..c])?);
    let mut gain = Vec::with_capacity(len + 1 - c);
    let mut diff = Vec::with_capacity(len + 1 - c);
    for i in c..=len {
        let next = clamp(pair.query_labels(&z[..=i])?);
        gain.push(next.iter().zip(&prev).map(|(&a, &b)| bernoulli_kl(a, b)).collect());
        diff.push(next.iter().zip(&prev).map(|(&a, &b)| a - b).collect());
        prev = next;
    }
    Ok(ParticleTerms { gain, diff })
}

/// Scores an explicit particle set. Particles are evaluated in parallel and
/// reduced in index order, so the result does not depend on scheduling.
pub fn estimate_from_particles<F: Scalar>(
    pair: &EstimatorPair<F>,
    particles: &ParticleSet,
    eps: F,
) -> Result<CmiMatrix<F>> {
    let c = particles.context_floor;
    let terms = particles
        .particles
        .par_iter()
        .map(|z| particle_terms(pair, z, c, eps))
        .collect::<Result<Vec<_>>>()?;
    let n = terms.len();
    let len = particles.particles[0].len() - 1;
    let n_labels = pair.n_labels();
    let rows = len + 1 - c;
    let nf = F::of_count(n as u64);
    let mut values = vec![vec![F::zero(); n_labels]; rows];
    let mut indicator_mean = vec![vec![F::zero(); n_labels]; rows];
    let mut indicator_std = vec![vec![F::zero(); n_labels]; rows];
    let mut column = Vec::with_capacity(n);
    for r in 0..rows {
        for j in 0..n_labels {
            let mut s = F::zero();
            for t in &terms {
                s = s + t.gain[r][j];
            }
            values[r][j] = s / nf;
            column.clear();
            column.extend(terms.iter().map(|t| t.diff[r][j]));
            indicator_mean[r][j] = scalar::mean(&column);
            indicator_std[r][j] = scalar::sample_std(&column);
        }
    }
    Ok(CmiMatrix { context_floor: c, len, n_labels, n_particles: n, eps, values, indicator_mean, indicator_std })
}

/// Draws particles for `seq` and estimates CMI and indicator statistics.
pub fn estimate_cmi<F: Scalar>(pair: &EstimatorPair<F>, seq: &LabeledSequence, cfg: &SamplingConfig) -> Result<CmiMatrix<F>> {
    check_length(seq, cfg)?;
    let particles = sample_particles(pair, seq, cfg)?;
    estimate_from_particles(pair, &particles, F::of(cfg.eps))
}

/// Particle mean and sample std of the change in label probability, per
/// `[step - context_floor][label]`.
pub fn causal_indicator<F: Scalar>(
    pair: &EstimatorPair<F>,
    seq: &LabeledSequence,
    cfg: &SamplingConfig,
) -> Result<Vec<Vec<(F, F)>>> {
    let m = estimate_cmi(pair, seq, cfg)?;
    Ok(m.indicator_mean
        .iter()
        .zip(&m.indicator_std)
        .map(|(mu, sd)| mu.iter().copied().zip(sd.iter().copied()).collect())
        .collect())
}
