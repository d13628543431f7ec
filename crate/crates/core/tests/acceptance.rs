//! End-to-end acceptance checks. Each check prints one `[PASS]` or `[FAIL]`
//! line with the measured numbers, then asserts. Runs without the libtest
//! harness so every line is shown and checks run one at a time.

use std::time::{Duration, Instant};

use rand::Rng;

use oscar_core::density::{fit_ngram, oracle_pair, NGramConfig};
use oscar_core::engine::{
    discover, discover_batch, dynamic_threshold, estimate_cmi, SamplingConfig, Strategy, ThresholdConfig,
};
use oscar_core::eval::{aggregate, score_all, score_mb, AggregateReport, EvalOptions, MbScore, Prf};
use oscar_core::rng;
use oscar_core::synthgen::{
    model_truth, random_model, rules_from, sample_dataset, sample_split, tiered_model, GeneratorModel, LabelRule,
    LengthSpec, Literal, RandomModelSpec, TieredModelSpec,
};
use oscar_core::{Estimator, EventVocabulary, LabelCatalog, LabeledSequence, MarkovBoundarySet};

fn verdict(id: u32, name: &str, pass: bool, detail: &str) {
    println!("[{}] {id:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
}

fn scores_for(
    pair: &Estimator,
    seqs: &[LabeledSequence],
    s: &SamplingConfig,
    t: &ThresholdConfig,
    truth: &MarkovBoundarySet,
) -> Vec<MbScore> {
    let mbs: Vec<MarkovBoundarySet> =
        discover_batch(pair, seqs, s, t).into_iter().map(|r| r.expect("discovery").boundaries()).collect();
    score_all(seqs, &mbs, truth, &EvalOptions::default()).unwrap()
}

fn report_for(
    pair: &Estimator,
    seqs: &[LabeledSequence],
    s: &SamplingConfig,
    t: &ThresholdConfig,
    truth: &MarkovBoundarySet,
) -> AggregateReport {
    aggregate(&scores_for(pair, seqs, s, t, truth), truth.n_labels()).unwrap()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0)
}

fn suite_model(i: u64) -> GeneratorModel {
    let n_events = 4 + (i as usize % 7);
    let len = 4 + (i as usize % 5);
    random_model(&RandomModelSpec {
        n_events,
        length: LengthSpec::Fixed(len),
        n_rule_labels: 2,
        n_coin_labels: 0,
        literals: (1, 4),
        negation_rate: 0.2,
        disjunction_rate: 0.3,
        concentration: 1.0,
        seed: 1000 + i,
    })
    .unwrap()
}

fn mean_instance(scores: &[MbScore]) -> Prf {
    let s: Vec<&MbScore> = scores.iter().filter(|s| s.has_truth).collect();
    let n = s.len() as f64;
    Prf {
        precision: s.iter().map(|x| x.prf.precision).sum::<f64>() / n,
        recall: s.iter().map(|x| x.prf.recall).sum::<f64>() / n,
        f1: s.iter().map(|x| x.prf.f1).sum::<f64>() / n,
    }
}

fn c01_oracle_identifiability() {
    let start = Instant::now();
    let s = SamplingConfig { n_particles: 512, context_floor: 1, ..Default::default() };
    let t = ThresholdConfig::new(2.75);
    let mut all = Vec::new();
    let mut loose = Vec::new();
    for i in 0..20 {
        let m = suite_model(i);
        let pair = oracle_pair::<f64>(&m).unwrap();
        let seqs = sample_dataset(&m, 100).unwrap();
        let truth = model_truth(&m);
        all.extend(scores_for(&pair, &seqs, &s, &t, &truth));
        loose.extend(scores_for(&pair, &seqs, &s, &ThresholdConfig::new(1.0), &truth));
    }
    let elapsed = start.elapsed();
    let got = mean_instance(&all);
    let pass = got.f1 >= 0.90 && got.precision >= 0.90 && elapsed < Duration::from_secs(300);
    verdict(
        1,
        "oracle identifiability",
        pass,
        &format!(
            "mean F1 {:.4}, precision {:.4} over {} instances in {:.1?} (need F1, precision >= 0.90, < 5 min)",
            got.f1,
            got.precision,
            all.iter().filter(|s| s.has_truth).count(),
            elapsed
        ),
    );
    // At most 8 scored steps, a value can sit at most (n - 1) / sqrt(n) <= 2.47
    // sample deviations above the mean, so k = 2.75 retains only exact ties.
    let info = mean_instance(&loose);
    println!(
        "       info: max attainable z-score with 8 steps is {:.3}; same suite at k = 1.0 gives F1 {:.4}, precision {:.4}",
        7.0 / 8f64.sqrt(),
        info.f1,
        info.precision
    );
    assert!(pass);
}

fn c02_closed_form_cmi() {
    let m = GeneratorModel::new(
        EventVocabulary::with_marker("<bos>", ["a", "b"]).unwrap(),
        LabelCatalog::new(vec!["y".into()]).unwrap(),
        GeneratorModel::uniform_transition(3),
        LengthSpec::Fixed(2),
        vec![LabelRule::all_of(0, [Literal::pos(1)]).unwrap()],
        vec![],
        0,
    )
    .unwrap();
    let pair = oracle_pair::<f64>(&m).unwrap();
    let seq = LabeledSequence::from_events(&[2, 1], vec![true]).unwrap();
    let s = SamplingConfig { n_particles: 1, strategy: Strategy::None, context_floor: 1, ..Default::default() };
    let got = estimate_cmi(&pair, &seq, &s).unwrap().get(1, 0).unwrap();
    let want = 0.5 * (0.5f64 / 0.75).ln() + 0.5 * (0.5f64 / 0.25).ln();
    let pass = (got - want).abs() < 1e-6 && (got - 0.143841).abs() < 1e-6;
    verdict(2, "closed-form CMI", pass, &format!("engine {got:.9}, Bernoulli KL(0.5 || 0.75) {want:.9}"));
    assert!(pass);
}

fn c03_monte_carlo_variance() {
    let m = random_model(&RandomModelSpec {
        n_events: 5,
        length: LengthSpec::Fixed(10),
        n_rule_labels: 2,
        literals: (1, 2),
        negation_rate: 0.0,
        seed: 33,
        ..Default::default()
    })
    .unwrap();
    let pair = oracle_pair::<f64>(&m).unwrap();
    let seq = sample_dataset(&m, 1).unwrap().remove(0);
    let base = SamplingConfig { strategy: Strategy::TopK, context_floor: 5, ..Default::default() };

    // The (step, label) cell whose per-particle terms vary the most.
    let probe = estimate_cmi(&pair, &seq, &SamplingConfig { n_particles: 256, ..base }).unwrap();
    let (mut row, mut label, mut best) = (0, 0, -1.0);
    for (r, sds) in probe.indicator_std.iter().enumerate() {
        for (j, &sd) in sds.iter().enumerate() {
            if sd > best {
                (row, label, best) = (r, j, sd);
            }
        }
    }
    let step = probe.context_floor + row;

    let seeds = 1000u64;
    let ns = [32usize, 64, 128, 256];
    let vars: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let est: Vec<f64> = (0..seeds)
                .map(|seed| {
                    let cfg = SamplingConfig { n_particles: n, seed, ..base };
                    estimate_cmi(&pair, &seq, &cfg).unwrap().get(step, label).unwrap()
                })
                .collect();
            variance(&est)
        })
        .collect();
    let ratios: Vec<f64> = vars.windows(2).map(|w| w[0] / w[1]).collect();
    let pass = best > 0.0 && ratios.iter().all(|r| (1.5..=2.5).contains(r));
    verdict(
        3,
        "Monte-Carlo variance law",
        pass,
        &format!("var(N)/var(2N) for N = 32, 64, 128: {ratios:.3?} over {seeds} seeds at step {step}, label {label}"),
    );
    assert!(pass);
}

fn c04_independence_soundness() {
    let seeds = 100u64;
    let t = ThresholdConfig::new(2.75);
    let mut cells = 0usize;
    let mut within = 0usize;
    let mut runs = 0usize;
    let mut false_runs = 0usize;
    let mut worst: f64 = 0.0;

    let mut check = |pair: &Estimator, seq: &LabeledSequence, cfg: SamplingConfig, labels: &[usize]| {
        let results: Vec<_> = (0..seeds).map(|seed| discover(pair, seq, &cfg.with_seed(seed), &t).unwrap()).collect();
        let first = &results[0].cmi;
        for &j in labels {
            for step in first.steps() {
                let v: Vec<f64> = results.iter().map(|r| r.cmi.get(step, j).unwrap()).collect();
                let m = mean(&v);
                let se = (variance(&v) / seeds as f64).sqrt();
                cells += 1;
                worst = worst.max(m.abs());
                // 1e-12 absorbs rounding on an exactly-zero quantity.
                if m.abs() <= 3.0 * se + 1e-12 {
                    within += 1;
                }
            }
            for r in &results {
                runs += 1;
                if !r.labels[j].edges.is_empty() {
                    false_runs += 1;
                }
            }
        }
    };

    // Coin labels are independent of every event.
    for i in 0..5 {
        let m = random_model(&RandomModelSpec {
            n_events: 6,
            length: LengthSpec::Fixed(12),
            n_rule_labels: 1,
            n_coin_labels: 2,
            seed: 400 + i,
            ..Default::default()
        })
        .unwrap();
        let pair = oracle_pair::<f64>(&m).unwrap();
        let seq = sample_dataset(&m, 1).unwrap().remove(0);
        let cfg = SamplingConfig { n_particles: 256, context_floor: 4, ..Default::default() };
        check(&pair, &seq, cfg, &[1, 2]);
    }

    // A rule whose only variable sits in the context is settled there; a
    // permuted context keeps it, so later steps are independent of the label.
    for i in 0..5 {
        let m = random_model(&RandomModelSpec {
            n_events: 6,
            length: LengthSpec::Fixed(12),
            n_rule_labels: 1,
            literals: (1, 1),
            negation_rate: 0.0,
            seed: 500 + i,
            ..Default::default()
        })
        .unwrap();
        let var = m.rules[0].variables()[0];
        let pair = oracle_pair::<f64>(&m).unwrap();
        let seq = sample_split(&m, 500, 7)
            .unwrap()
            .into_iter()
            .find(|s| s.tokens()[1..4].contains(&var))
            .expect("a sequence with the variable in its context");
        let cfg = SamplingConfig { n_particles: 256, context_floor: 4, strategy: Strategy::Permutation, ..Default::default() };
        check(&pair, &seq, cfg, &[0]);
    }

    let rate = false_runs as f64 / runs as f64;
    let pass = within == cells && rate < 0.05;
    verdict(
        4,
        "independence soundness",
        pass,
        &format!(
            "{within}/{cells} independent cells within 3 SE of 0 (largest |mean| {worst:.2e}); false-edge rate {:.2}% over {runs} runs",
            100.0 * rate
        ),
    );
    assert!(pass);
}

fn c05_threshold_algebra() {
    let mut r = rng::stream(&[5]);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let n = r.random_range(2..100);
        let scale = 10f64.powf(r.random_range(-8.0..1.0));
        let v: Vec<f64> = (0..n).map(|_| scale * r.random::<f64>()).collect();
        let k = r.random_range(0.0..5.0);
        let got = dynamic_threshold(&v, &ThresholdConfig::new(k)).unwrap();
        let mut sum = 0.0;
        for x in &v {
            sum += x;
        }
        let mu = sum / n as f64;
        let mut ss = 0.0;
        for x in &v {
            ss += (x - mu) * (x - mu);
        }
        let want = mu + k * (ss / (n as f64 - 1.0)).sqrt();
        worst = worst.max((got - want).abs());
    }
    let pass = worst <= 1e-12;
    verdict(5, "threshold algebra", pass, &format!("max |theta - (mu + k sigma)| = {worst:.2e} over 10^4 vectors"));
    assert!(pass);
}

fn brute_prf(inferred: &[usize], truth: &[usize]) -> Prf {
    let mut hits = 0;
    for a in inferred {
        for b in truth {
            if a == b {
                hits += 1;
            }
        }
    }
    let p = if inferred.is_empty() { 0.0 } else { hits as f64 / inferred.len() as f64 };
    let r = if truth.is_empty() { 0.0 } else { hits as f64 / truth.len() as f64 };
    let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    Prf { precision: p, recall: r, f1 }
}

fn c06_metric_oracle() {
    let subset = |mask: u32, universe: usize| -> Vec<usize> { (0..universe).filter(|&i| mask >> i & 1 == 1).collect() };
    let mut checked = 0usize;
    let mut mismatches = 0usize;
    for a in 0..64u32 {
        for b in 1..64u32 {
            let (i, t) = (subset(a, 6), subset(b, 6));
            checked += 1;
            if score_mb(&i.iter().copied().collect(), &t.iter().copied().collect()) != brute_prf(&i, &t) {
                mismatches += 1;
            }
        }
    }
    let mut r = rng::stream(&[6]);
    let draw = |r: &mut rand_chacha::ChaCha8Rng, min: usize| -> Vec<usize> {
        let size = r.random_range(min..=20);
        let mut v: Vec<usize> = Vec::new();
        while v.len() < size {
            let x = r.random_range(0..40);
            if !v.contains(&x) {
                v.push(x);
            }
        }
        v
    };
    for _ in 0..10_000 {
        let i = draw(&mut r, 0);
        let t = draw(&mut r, 1);
        checked += 1;
        if score_mb(&i.iter().copied().collect(), &t.iter().copied().collect()) != brute_prf(&i, &t) {
            mismatches += 1;
        }
    }
    let pass = mismatches == 0;
    verdict(6, "metric oracle equivalence", pass, &format!("{mismatches} mismatches in {checked} set pairs"));
    assert!(pass);
}

fn ablation_model(seed: u64) -> GeneratorModel {
    tiered_model(&TieredModelSpec {
        rules: rules_from(&[("y1", &[&["m1"]]), ("y2", &[&["m2"], &["m3"]]), ("y3", &[&["m4", "m5"]])]),
        seed,
        ..Default::default()
    })
    .unwrap()
}

fn ngram_config() -> NGramConfig {
    NGramConfig { order: 2, label_window: 64, alpha: 0.5 }
}

fn c07_sampling_ablation() {
    let m = ablation_model(1);
    let train = sample_split(&m, 50_000, 0).unwrap();
    let test = sample_split(&m, 300, 1).unwrap();
    let pair = fit_ngram::<f64>(&train, m.vocab.len(), m.n_labels(), ngram_config()).unwrap();
    let truth = model_truth(&m);
    let t = ThresholdConfig::new(2.75);
    let base = SamplingConfig { n_particles: 68, k: 35, p: 0.8, context_floor: 15, ..Default::default() };
    let f1 = |st: Strategy| report_for(&pair, &test, &base.with_strategy(st), &t, &truth).weighted.f1;
    let none = f1(Strategy::None);
    let nucleus = f1(Strategy::TopKNucleus);
    let top_k = f1(Strategy::TopK);
    let permutation = f1(Strategy::Permutation);
    let pass = nucleus > none && permutation < top_k;
    verdict(
        7,
        "sampling ablation direction",
        pass,
        &format!(
            "weighted F1: top_k_nucleus {nucleus:.4} vs none {none:.4}; permutation {permutation:.4} vs top_k {top_k:.4}"
        ),
    );
    assert!(pass);
}

fn c08_linear_in_particles() {
    let m = random_model(&RandomModelSpec {
        n_events: 8,
        length: LengthSpec::Fixed(24),
        n_rule_labels: 3,
        seed: 8,
        ..Default::default()
    })
    .unwrap();
    let pair = oracle_pair::<f64>(&m).unwrap();
    let seqs = sample_dataset(&m, 64).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let t = ThresholdConfig::default();
    let ns = [16usize, 32, 64, 128, 256];
    let times: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let cfg = SamplingConfig { n_particles: n, context_floor: 8, ..Default::default() };
            let mut reps: Vec<f64> = (0..7)
                .map(|_| {
                    let t0 = Instant::now();
                    let out = pool.install(|| discover_batch(&pair, &seqs, &cfg, &t));
                    assert!(out.iter().all(|r| r.is_ok()));
                    t0.elapsed().as_secs_f64()
                })
                .collect();
            reps.sort_by(|a, b| a.partial_cmp(b).unwrap());
            reps[reps.len() / 2]
        })
        .collect();
    let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let (mx, my) = (mean(&x), mean(&times));
    let sxy: f64 = x.iter().zip(&times).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(&times).map(|(a, b)| (b - (intercept + slope * a)).powi(2)).sum();
    let ss_tot: f64 = times.iter().map(|b| (b - my).powi(2)).sum();
    let r2 = 1.0 - ss_res / ss_tot;
    let pass = r2 >= 0.95;
    verdict(
        8,
        "runtime linear in N",
        pass,
        &format!("R^2 {r2:.4}; median seconds {:?} for N = {ns:?}", times.iter().map(|t| format!("{t:.4}")).collect::<Vec<_>>()),
    );
    assert!(pass);
}

fn c09_rare_label_degradation() {
    let mut lower = 0;
    let mut lines = Vec::new();
    let mut max_support: f64 = 0.0;
    for run in 0..10u64 {
        let m = tiered_model(&TieredModelSpec {
            rare_rates: vec![0.0002],
            rules: rules_from(&[("common", &[&["m1"]]), ("rare", &[&["q1"]])]),
            seed: 100 + run,
            ..Default::default()
        })
        .unwrap();
        let train = sample_split(&m, 5_000, 0).unwrap();
        let rare_support = train.iter().filter(|s| s.labels()[1]).count() as f64 / train.len() as f64;
        max_support = max_support.max(rare_support);
        let pool = sample_split(&m, 40_000, 1).unwrap();
        let pair = fit_ngram::<f64>(&train, m.vocab.len(), m.n_labels(), ngram_config()).unwrap();
        let truth = model_truth(&m);
        let s = SamplingConfig { seed: run, ..Default::default() };
        let t = ThresholdConfig::new(2.75);
        let f1 = |j: usize| {
            let seqs: Vec<LabeledSequence> = pool.iter().filter(|s| s.labels()[j]).take(40).cloned().collect();
            report_for(&pair, &seqs, &s, &t, &truth).per_label[j].mean.f1
        };
        let (common, rare) = (f1(0), f1(1));
        if rare < common {
            lower += 1;
        }
        lines.push(format!("{rare:.3}/{common:.3}"));
    }
    let pass = lower >= 8 && max_support < 0.01;
    verdict(
        9,
        "rare-label degradation direction",
        pass,
        &format!(
            "rare F1 below common F1 in {lower}/10 runs (rare/common: {}); rare support at most {:.2}%",
            lines.join(" "),
            100.0 * max_support
        ),
    );
    assert!(pass);
}

fn c10_scheduling_independence() {
    let m = ablation_model(10);
    let train = sample_split(&m, 5_000, 0).unwrap();
    let test = sample_split(&m, 40, 1).unwrap();
    let ngram = fit_ngram::<f64>(&train, m.vocab.len(), m.n_labels(), ngram_config()).unwrap();
    let small = suite_model(3);
    let oracle = oracle_pair::<f64>(&small).unwrap();
    let small_seqs = sample_dataset(&small, 40).unwrap();
    let t = ThresholdConfig::default();

    let render = |threads: usize| -> Vec<u8> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let mut out = Vec::new();
            for r in discover_batch(&ngram, &test, &SamplingConfig::default(), &t) {
                let r = r.unwrap();
                out.extend(serde_json::to_vec(&r.to_json(&m.vocab, &m.catalog).unwrap()).unwrap());
                out.extend(serde_json::to_vec(&r).unwrap());
            }
            let cfg = SamplingConfig { context_floor: 2, n_particles: 128, ..Default::default() };
            for r in discover_batch(&oracle, &small_seqs, &cfg, &t) {
                out.extend(serde_json::to_vec(&r.unwrap()).unwrap());
            }
            out
        })
    };
    let one = render(1);
    let four = render(4);
    let eight = render(8);
    let pass = one == four && one == eight;
    verdict(
        10,
        "determinism across parallelism",
        pass,
        &format!("{} bytes at 1 thread; 4 threads identical: {}; 8 threads identical: {}", one.len(), one == four, one == eight),
    );
    assert!(pass);
}

fn main() {
    let checks: [(&str, fn()); 10] = [
        ("c01_oracle_identifiability", c01_oracle_identifiability),
        ("c02_closed_form_cmi", c02_closed_form_cmi),
        ("c03_monte_carlo_variance", c03_monte_carlo_variance),
        ("c04_independence_soundness", c04_independence_soundness),
        ("c05_threshold_algebra", c05_threshold_algebra),
        ("c06_metric_oracle", c06_metric_oracle),
        ("c07_sampling_ablation", c07_sampling_ablation),
        ("c08_linear_in_particles", c08_linear_in_particles),
        ("c09_rare_label_degradation", c09_rare_label_degradation),
        ("c10_scheduling_independence", c10_scheduling_independence),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = Vec::new();
    for (name, check) in checks {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        if let Err(e) = std::panic::catch_unwind(check) {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            if let Some(m) = msg.filter(|m| m != "assertion failed: pass") {
                println!("       {name} panicked: {m}");
            }
            failed.push(name);
        }
    }
    if failed.is_empty() {
        println!("\nacceptance: all checks passed");
    } else {
        println!("\nacceptance: {} failed: {}", failed.len(), failed.join(", "));
        std::process::exit(1);
    }
}
