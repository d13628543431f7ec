//! Particle contexts for the Monte-Carlo estimate.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::EstimatorPair;
use crate::engine::config::{SamplingConfig, Strategy};
use crate::error::{Error, Result};
use crate::rng::{self, domain};
use crate::scalar::Scalar;
use crate::types::{EventId, LabeledSequence};

/// Indices sorted by decreasing probability; ties go to the lower index.
fn sorted_indices<F: Scalar>(probs: &[F]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..probs.len()).collect();
    idx.sort_by(|&a, &b| probs[b].partial_cmp(&probs[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    idx
}

fn renormalize<F: Scalar>(mut w: Vec<F>) -> Vec<F> {
    let total: F = w.iter().copied().sum();
    if total > F::zero() {
        w.iter_mut().for_each(|x| *x = *x / total);
    }
    w
}

/// `softmax(log p / T)`; zero entries stay zero.
pub fn apply_temperature<F: Scalar>(probs: &[F], temperature: F) -> Vec<F> {
    let logs: Vec<F> = probs.iter().map(|&p| if p > F::zero() { p.ln() / temperature } else { F::neg_infinity() }).collect();
    let max = logs.iter().copied().fold(F::neg_infinity(), F::max);
    if max == F::neg_infinity() {
        return probs.to_vec();
    }
    renormalize(logs.into_iter().map(|l| (l - max).exp()).collect())
}

/// Keeps the `k` most probable positive entries and renormalizes.
pub fn top_k<F: Scalar>(probs: &[F], k: usize) -> Vec<F> {
    let mut out = vec![F::zero(); probs.len()];
    for &i in sorted_indices(probs).iter().take(k) {
        out[i] = probs[i];
    }
    renormalize(out)
}

/// Top-k, then the smallest sorted prefix of the survivors whose cumulative
/// mass (under `probs`) exceeds `p`, keeping at least one entry, renormalized.
pub fn top_k_nucleus<F: Scalar>(probs: &[F], k: usize, p: F) -> Vec<F> {
    let mut out = vec![F::zero(); probs.len()];
    let mut cum = F::zero();
    for &i in sorted_indices(probs).iter().take(k) {
        if probs[i] <= F::zero() && cum > F::zero() {
            break;
        }
        out[i] = probs[i];
        cum = cum + probs[i];
        if cum > p {
            break;
        }
    }
    renormalize(out)
}

/// Distribution a context step is drawn from under `cfg`.
pub fn sampling_distribution<F: Scalar>(probs: &[F], cfg: &SamplingConfig) -> Vec<F> {
    let tempered = match cfg.temperature {
        Some(t) => apply_temperature(probs, F::of(t)),
        None => probs.to_vec(),
    };
    match cfg.strategy {
        Strategy::TopK => top_k(&tempered, cfg.k),
        Strategy::TopKNucleus => top_k_nucleus(&tempered, cfg.k, F::of(cfg.p)),
        Strategy::None | Strategy::Permutation => tempered,
    }
}

/// Inverse-CDF draw. Falls back to the last positive entry on rounding.
pub fn draw<F: Scalar, R: Rng + ?Sized>(probs: &[F], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        let p = p.as_f64();
        if p > 0.0 {
            cum += p;
            last = i;
            if u < cum {
                return i;
            }
        }
    }
    last
}

/// Token sequences sharing the source suffix; `tokens[l][0]` is the begin marker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticleSet {
    pub context_floor: usize,
    pub particles: Vec<Vec<EventId>>,
}

impl ParticleSet {
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }
}

pub(crate) fn check_length(seq: &LabeledSequence, cfg: &SamplingConfig) -> Result<()> {
    cfg.validate()?;
    if seq.len() < cfg.context_floor {
        return Err(Error::ContextTooShort { len: seq.len(), context_floor: cfg.context_floor });
    }
    Ok(())
}

/// Resamples steps `1..c` of `seq` once per particle. Context step `t` is
/// drawn from the event model given the observed tokens before `t`.
pub fn sample_particles<F: Scalar>(
    pair: &EstimatorPair<F>,
    seq: &LabeledSequence,
    cfg: &SamplingConfig,
) -> Result<ParticleSet> {
    check_length(seq, cfg)?;
    let tokens = seq.tokens();
    let c = cfg.context_floor;
    let n = cfg.effective_particles();
    let key = rng::content_key(&tokens, seq.labels());

    let particles = match cfg.strategy {
        Strategy::None => vec![tokens],
        Strategy::Permutation => (0..n)
            .map(|l| {
                let mut z = tokens.clone();
                let mut r = rng::stream(&[domain::PERMUTE, cfg.seed, key, l as u64]);
                z[1..c].shuffle(&mut r);
                z
            })
            .collect(),
        Strategy::TopK | Strategy::TopKNucleus => {
            let rows = (1..c)
                .map(|t| Ok(sampling_distribution(pair.query_event(&tokens[..t])?.probs(), cfg)))
                .collect::<Result<Vec<_>>>()?;
            (0..n)
                .into_par_iter()
                .map(|l| {
                    let mut z = tokens.clone();
                    for (t, row) in (1..c).zip(&rows) {
                        let mut r = rng::stream(&[domain::CONTEXT, cfg.seed, key, l as u64, t as u64]);
                        z[t] = draw(row, &mut r);
                    }
                    z
                })
                .collect()
        }
    };
    Ok(ParticleSet { context_floor: c, particles })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::oracle_pair;
    use crate::synthgen::{GeneratorModel, LabelRule, LengthSpec, Literal};
    use crate::types::{EventVocabulary, LabelCatalog};
    use proptest::prelude::{prop, prop_assert, proptest};
    use proptest::strategy::Strategy as _;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn top_k_renormalizes() {
        assert!(close(&top_k(&[0.5, 0.3, 0.1, 0.1], 2), &[0.625, 0.375, 0.0, 0.0]));
    }

    #[test]
    fn no_truncation_when_k_covers_vocabulary_and_p_is_one() {
        let d = [0.0, 0.2, 0.5, 0.3];
        assert!(close(&top_k_nucleus(&d, 35, 1.0), &d));
    }

    #[test]
    fn nucleus_keeps_one_when_first_mass_exceeds_p() {
        assert!(close(&top_k_nucleus(&[0.9, 0.1], 2, 0.8), &[1.0, 0.0]));
        assert!(close(&top_k_nucleus(&[0.1, 0.9], 2, 0.05), &[0.0, 1.0]));
    }

    #[test]
    fn nucleus_includes_the_crossing_entry() {
        // 0.5 + 0.25 is not above 0.75, so the next entry joins.
        let out = top_k_nucleus(&[0.5, 0.25, 0.125, 0.125], 4, 0.75);
        assert!(close(&out, &[0.5 / 0.875, 0.25 / 0.875, 0.125 / 0.875, 0.0]));
    }

    #[test]
    fn ties_prefer_lower_index() {
        assert!(close(&top_k(&[0.25, 0.25, 0.25, 0.25], 1), &[1.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn temperature_sharpens_and_flattens() {
        let d = [0.0, 0.2, 0.8];
        let sharp: Vec<f64> = apply_temperature(&d, 0.5);
        assert!((sharp[2] - 0.64 / 0.68).abs() < 1e-12);
        assert_eq!(sharp[0], 0.0);
        let same = apply_temperature(&d, 1.0);
        assert!(close(&same, &d));
    }

    fn model(len: usize) -> GeneratorModel {
        GeneratorModel::new(
            EventVocabulary::with_marker("BOS", ["a", "b", "c"]).unwrap(),
            LabelCatalog::new(vec!["y".into()]).unwrap(),
            vec![
                vec![0.0, 0.6, 0.3, 0.1],
                vec![0.0, 0.1, 0.8, 0.1],
                vec![0.0, 0.5, 0.2, 0.3],
                vec![0.0, 0.3, 0.3, 0.4],
            ],
            LengthSpec::Fixed(len),
            vec![LabelRule::all_of(0, [Literal::pos(3)]).unwrap()],
            vec![],
            1,
        )
        .unwrap()
    }

    #[test]
    fn particles_keep_marker_and_suffix() {
        let pair = oracle_pair::<f64>(&model(6)).unwrap();
        let seq = LabeledSequence::from_events(&[1, 2, 3, 1, 2, 2], vec![true]).unwrap();
        for strategy in Strategy::ALL {
            let cfg = SamplingConfig { n_particles: 16, context_floor: 4, strategy, ..Default::default() };
            let set = sample_particles(&pair, &seq, &cfg).unwrap();
            assert_eq!(set.len(), cfg.effective_particles());
            for z in &set.particles {
                assert_eq!(z.len(), 7);
                assert_eq!(z[0], 0);
                assert_eq!(&z[4..], &seq.tokens()[4..]);
                assert!(z[1..4].iter().all(|&e| e != 0));
            }
            assert_eq!(set, sample_particles(&pair, &seq, &cfg).unwrap());
        }
    }

    #[test]
    fn permutation_preserves_context_multiset() {
        let pair = oracle_pair::<f64>(&model(6)).unwrap();
        let seq = LabeledSequence::from_events(&[1, 2, 3, 1, 2, 2], vec![true]).unwrap();
        let cfg = SamplingConfig { n_particles: 8, context_floor: 5, strategy: Strategy::Permutation, ..Default::default() };
        for z in sample_particles(&pair, &seq, &cfg).unwrap().particles {
            let mut ctx = z[1..5].to_vec();
            ctx.sort();
            assert_eq!(ctx, vec![1, 1, 2, 3]);
        }
    }

    #[test]
    fn nucleus_context_uses_only_surviving_events() {
        // After `a` the nucleus at p = 0.5 keeps only `b` (0.8).
        let pair = oracle_pair::<f64>(&model(6)).unwrap();
        let seq = LabeledSequence::from_events(&[1, 1, 3, 1, 2, 2], vec![true]).unwrap();
        let cfg = SamplingConfig { n_particles: 32, context_floor: 3, p: 0.5, ..Default::default() };
        for z in sample_particles(&pair, &seq, &cfg).unwrap().particles {
            assert_eq!(z[1], 1);
            assert_eq!(z[2], 2);
        }
    }

    #[test]
    fn too_short_sequences_are_rejected() {
        let pair = oracle_pair::<f64>(&model(3)).unwrap();
        let seq = LabeledSequence::from_events(&[1, 2, 3], vec![true]).unwrap();
        let cfg = SamplingConfig { context_floor: 4, ..Default::default() };
        assert!(matches!(sample_particles(&pair, &seq, &cfg), Err(Error::ContextTooShort { len: 3, context_floor: 4 })));
    }

    #[test]
    fn draw_frequencies_match() {
        let probs = [0.0, 0.25, 0.75];
        let mut r = rng::stream(&[1]);
        let hits = (0..20_000).filter(|_| draw(&probs, &mut r) == 2).count();
        assert!((hits as f64 / 20_000.0 - 0.75).abs() < 0.015);
    }

    fn dist() -> impl proptest::strategy::Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, 1..12).prop_filter_map("mass", |w| {
            let s: f64 = w.iter().sum();
            (s > 1e-6).then(|| w.iter().map(|x| x / s).collect())
        })
    }

    fn support(v: &[f64]) -> Vec<usize> {
        (0..v.len()).filter(|&i| v[i] > 0.0).collect()
    }

    proptest! {
        #[test]
        fn larger_k_supports_a_superset(d in dist(), k in 1usize..12, extra in 0usize..5) {
            let small = support(&top_k(&d, k));
            let big = support(&top_k(&d, k + extra));
            prop_assert!(small.iter().all(|i| big.contains(i)));
        }

        #[test]
        fn larger_p_supports_a_superset(d in dist(), k in 1usize..12, p in 0.01f64..1.0, dp in 0.0f64..0.5) {
            let small = support(&top_k_nucleus(&d, k, p));
            let big = support(&top_k_nucleus(&d, k, (p + dp).min(1.0)));
            prop_assert!(small.iter().all(|i| big.contains(i)));
        }

        #[test]
        fn nucleus_never_empty(d in dist(), k in 1usize..12, p in 0.0001f64..1.0) {
            let out = top_k_nucleus(&d, k, p);
            prop_assert!(!support(&out).is_empty());
            prop_assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
