use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use serde_json::{json, Value};

use oscar_core::density::{oracle_pair, EstimatorPair, NGramCounts, NGramFile};
use oscar_core::engine::{discover as discover_one, discover_batch, SamplingConfig};
use oscar_core::eval::{aggregate, fold_report, score_all, RuntimeStats};
use oscar_core::io::{read_catalog, read_sequences, read_vocabulary, write_sequences};
use oscar_core::synthgen::{model_truth, sample_split, GeneratorModel, ModelFile};
use oscar_core::{EventVocabulary, LabelCatalog, LabeledSequence, MarkovBoundarySet};

use crate::config::{Backend, RunConfig};
use crate::{manifest, Failure};

struct Schema {
    vocab: EventVocabulary,
    catalog: LabelCatalog,
    model: Option<GeneratorModel>,
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path).map(BufReader::new).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<GeneratorModel, Failure> {
    let file: ModelFile = serde_json::from_reader(open(path)?)
        .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    file.into_model().map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

fn schema(cfg: &RunConfig) -> Result<Schema, Failure> {
    if let Some(path) = &cfg.paths.model {
        cfg.require(&[("model", path.clone())])?;
        let model = load_model(path)?;
        return Ok(Schema { vocab: model.vocab.clone(), catalog: model.catalog.clone(), model: Some(model) });
    }
    let (v, l) = (cfg.paths.vocab.clone().unwrap(), cfg.paths.labels.clone().unwrap());
    cfg.require(&[("vocab", v.clone()), ("labels", l.clone())])?;
    Ok(Schema { vocab: read_vocabulary(open(&v)?)?, catalog: read_catalog(open(&l)?)?, model: None })
}

fn read_dataset(path: &Path, schema: &Schema) -> Result<Vec<LabeledSequence>, Failure> {
    read_sequences(open(path)?, &schema.vocab, &schema.catalog)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), Failure> {
    write_file(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn estimator(cfg: &RunConfig, schema: &Schema) -> Result<(EstimatorPair<f64>, PathBuf), Failure> {
    let (pair, source) = match cfg.backend {
        Backend::Oracle => {
            let model = schema.model.as_ref().ok_or_else(|| Failure::config("the oracle backend needs paths.model"))?;
            (oracle_pair::<f64>(model)?, cfg.paths.model.clone().unwrap())
        }
        Backend::Ngram => {
            let path = cfg.estimator_path();
            cfg.require(&[("estimator (run `fit` first)", path.clone())])?;
            let file: NGramFile = serde_json::from_reader(open(&path)?)?;
            (NGramCounts::from_file(file)?.into_pair::<f64>(), path)
        }
    };
    if pair.vocab_size() != schema.vocab.len() || pair.n_labels() != schema.catalog.len() {
        return Err(Failure::config(format!(
            "estimator covers {} events and {} labels, data has {} and {}",
            pair.vocab_size(),
            pair.n_labels(),
            schema.vocab.len(),
            schema.catalog.len()
        )));
    }
    Ok((pair, source))
}

fn seq_name(i: usize) -> String {
    format!("{i:05}")
}

pub fn generate(cfg: &RunConfig) -> Result<(), Failure> {
    let path = cfg.paths.model.clone().ok_or_else(|| Failure::config("generate needs paths.model"))?;
    cfg.require(&[("model", path.clone())])?;
    let mut model = load_model(&path)?;
    model.seed = cfg.seed();
    if cfg.generate.train == 0 || cfg.generate.test == 0 {
        return Err(Failure::config("generate: train and test sizes must be positive"));
    }

    for (name, n, split) in [("train.jsonl", cfg.generate.train, 0), ("test.jsonl", cfg.generate.test, 1)] {
        let seqs = sample_split(&model, n, split)?;
        fs::create_dir_all(&cfg.out)?;
        let mut w = BufWriter::new(File::create(cfg.out.join(name))?);
        write_sequences(&mut w, &seqs, &model.vocab, &model.catalog)?;
        w.flush()?;
        info!("wrote {n} sequences to {name}");
    }
    write_json(&cfg.out.join("truth.json"), &oscar_core::synthgen::truth_file(&model)?)?;
    manifest::write(cfg, "generate", &[path])
}

pub fn fit(cfg: &RunConfig) -> Result<(), Failure> {
    let schema = schema(cfg)?;
    let corpus = cfg.corpus_path();
    cfg.require(&[("corpus", corpus.clone())])?;
    let seqs = read_dataset(&corpus, &schema)?;
    let t0 = Instant::now();
    let counts = NGramCounts::fit(&seqs, schema.vocab.len(), schema.catalog.len(), cfg.ngram())?;
    info!("fitted on {} sequences in {:.2} s", seqs.len(), t0.elapsed().as_secs_f64());
    let out = cfg.out.join("estimator.json");
    write_file(&out, &(serde_json::to_string(&counts.to_file())? + "\n"))?;
    manifest::write(cfg, "fit", &[corpus])
}

pub fn discover(cfg: &RunConfig) -> Result<(), Failure> {
    let schema = schema(cfg)?;
    let dataset = cfg.dataset_path();
    cfg.require(&[("dataset", dataset.clone())])?;
    let seqs = read_dataset(&dataset, &schema)?;
    let (pair, source) = estimator(cfg, &schema)?;
    let sampling = cfg.sampling();
    let threshold = cfg.threshold();

    let t0 = Instant::now();
    let results = discover_batch(&pair, &seqs, &sampling, &threshold);
    let seconds = t0.elapsed().as_secs_f64();

    let dir = cfg.discover_dir();
    if dir.exists() {
        fs::remove_dir_all(&dir)?;
    }
    fs::create_dir_all(&dir)?;
    let mut failed = 0u64;
    for (i, (seq, r)) in seqs.iter().zip(&results).enumerate() {
        let doc = match r {
            Ok(d) => {
                write_file(&dir.join(format!("{}.dot", seq_name(i))), &d.to_dot(seq, &schema.vocab, &schema.catalog)?)?;
                json!({ "sequence": i, "length": seq.len(), "labels": d.to_json(&schema.vocab, &schema.catalog)? })
            }
            Err(e) => {
                failed += 1;
                warn!("sequence {i}: {e}");
                json!({ "sequence": i, "length": seq.len(), "error": e.to_string() })
            }
        };
        write_json(&dir.join(format!("{}.json", seq_name(i))), &doc)?;
    }
    let n = seqs.len() as u64;
    let stats = RuntimeStats { sequences: n, failed, total_seconds: seconds, seconds_per_sequence: seconds / n as f64 };
    write_json(&cfg.out.join("timing.json"), &stats)?;
    info!("discovered {} sequences in {seconds:.2} s ({failed} failed)", n);
    manifest::write(cfg, "discover", &[dataset, source])
}

/// Ground truth from `paths.truth` (or the file written by `generate`),
/// falling back to the model's rules.
fn truth(cfg: &RunConfig, schema: &Schema) -> Result<MarkovBoundarySet, Failure> {
    let path = cfg.truth_path();
    if path.exists() {
        let file: BTreeMap<String, Vec<String>> = serde_json::from_reader(open(&path)?)?;
        let mut mb = MarkovBoundarySet::new(schema.catalog.len());
        for (label, events) in file {
            let j = schema.catalog.lookup(&label)?;
            for e in events {
                mb.insert(j, schema.vocab.lookup(&e)?);
            }
        }
        return Ok(mb);
    }
    match &schema.model {
        Some(m) => Ok(model_truth(m)),
        None => Err(Failure::config(format!("no ground truth: {} does not exist and no model is set", path.display()))),
    }
}

fn read_boundaries(cfg: &RunConfig, schema: &Schema, n: usize) -> Result<Vec<MarkovBoundarySet>, Failure> {
    let dir = cfg.discover_dir();
    (0..n)
        .map(|i| {
            let path = dir.join(format!("{}.json", seq_name(i)));
            cfg.require(&[("discovery result (run `discover` first)", path.clone())])?;
            let doc: Value = serde_json::from_reader(open(&path)?)?;
            let mut mb = MarkovBoundarySet::new(schema.catalog.len());
            if let Some(labels) = doc.get("labels").and_then(Value::as_object) {
                for (name, entry) in labels {
                    let j = schema.catalog.lookup(name)?;
                    for e in entry["events"].as_array().into_iter().flatten() {
                        let sym = e.as_str().ok_or_else(|| Failure::Runtime(format!("{}: bad event", path.display())))?;
                        mb.insert(j, schema.vocab.lookup(sym)?);
                    }
                }
            }
            Ok(mb)
        })
        .collect()
}

pub fn evaluate(cfg: &RunConfig) -> Result<(), Failure> {
    let schema = schema(cfg)?;
    let dataset = cfg.dataset_path();
    cfg.require(&[("dataset", dataset.clone())])?;
    let seqs = read_dataset(&dataset, &schema)?;
    let truth = truth(cfg, &schema)?;
    let inferred = read_boundaries(cfg, &schema, seqs.len())?;

    let scores = score_all(&seqs, &inferred, &truth, &cfg.eval_options())?;
    let mut report = aggregate(&scores, schema.catalog.len())?;
    let timing = cfg.out.join("timing.json");
    if timing.exists() {
        report.runtime = Some(serde_json::from_reader(open(&timing)?)?);
    }
    write_json(&cfg.out.join("report.json"), &report)?;
    write_file(&cfg.out.join("report.txt"), &report.to_text(schema.catalog.names()))?;
    write_file(&cfg.out.join("by_mb_length.csv"), &report.by_length_csv())?;
    if cfg.eval.folds > 1 {
        let folds = fold_report(&scores, seqs.len(), schema.catalog.len(), cfg.eval.folds)?;
        write_json(&cfg.out.join("folds.json"), &folds)?;
    }
    println!("{}", report.to_text(schema.catalog.names()).trim_end());
    manifest::write(cfg, "evaluate", &[dataset, cfg.truth_path()])
}

fn median_seconds(repeats: usize, mut f: impl FnMut()) -> f64 {
    let mut t: Vec<f64> = (0..repeats)
        .map(|_| {
            let t0 = Instant::now();
            f();
            t0.elapsed().as_secs_f64()
        })
        .collect();
    t.sort_by(f64::total_cmp);
    t[t.len() / 2]
}

pub fn bench(cfg: &RunConfig) -> Result<(), Failure> {
    let schema = schema(cfg)?;
    let dataset = cfg.dataset_path();
    cfg.require(&[("dataset", dataset.clone())])?;
    let mut seqs = read_dataset(&dataset, &schema)?;
    seqs.truncate(cfg.bench.sequences);
    let (pair, source) = estimator(cfg, &schema)?;
    let threshold = cfg.threshold();
    let base = cfg.sampling();
    let n = seqs.len();

    let mut csv = String::from("sweep,value,sequences,threads,seconds,seconds_per_sequence\n");
    let threads = rayon::current_num_threads();
    let mut row = |sweep: &str, value: usize, s: f64| {
        csv.push_str(&format!("{sweep},{value},{n},{threads},{s:.6},{:.6}\n", s / n as f64));
    };
    for &np in &cfg.bench.particles {
        let sampling = SamplingConfig { n_particles: np, ..base };
        let s = median_seconds(cfg.bench.repeats, || {
            let _ = discover_batch(&pair, &seqs, &sampling, &threshold);
        });
        info!("N = {np}: {s:.4} s");
        row("particles", np, s);
    }
    for &b in &cfg.bench.batch_sizes {
        let s = median_seconds(cfg.bench.repeats, || {
            for chunk in seqs.chunks(b) {
                let _ = discover_batch(&pair, chunk, &base, &threshold);
            }
        });
        info!("batch {b}: {s:.4} s");
        row("batch_size", b, s);
    }
    write_file(&cfg.out.join("bench.csv"), &csv)?;
    manifest::write(cfg, "bench", &[dataset, source])
}

pub fn export_dot(cfg: &RunConfig, which: &[usize]) -> Result<(), Failure> {
    let schema = schema(cfg)?;
    let dataset = cfg.dataset_path();
    cfg.require(&[("dataset", dataset.clone())])?;
    let seqs = read_dataset(&dataset, &schema)?;
    let (pair, source) = estimator(cfg, &schema)?;
    let picked: Vec<usize> = if which.is_empty() { (0..seqs.len()).collect() } else { which.to_vec() };
    let out_of_range: Vec<String> = picked
        .iter()
        .filter(|&&i| i >= seqs.len())
        .map(|i| format!("sequence {i} is out of range (dataset has {})", seqs.len()))
        .collect();
    if !out_of_range.is_empty() {
        return Err(Failure::Config(out_of_range));
    }
    let dir = cfg.out.join("dot");
    for &i in &picked {
        let d = discover_one(&pair, &seqs[i], &cfg.sampling(), &cfg.threshold())?;
        write_file(&dir.join(format!("{}.dot", seq_name(i))), &d.to_dot(&seqs[i], &schema.vocab, &schema.catalog)?)?;
    }
    manifest::write(cfg, "export-dot", &[dataset, source])
}
