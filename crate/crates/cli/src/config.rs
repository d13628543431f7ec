use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use oscar_core::density::NGramConfig;
use oscar_core::engine::{SamplingConfig, Strategy, ThresholdConfig};
use oscar_core::eval::{EvalOptions, TruthScope};

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Oracle,
    #[default]
    Ngram,
}

/// Input and output locations. Relative paths resolve against the directory
/// of the config file. Unset dataset paths default to files under `out`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Generator model (JSON). Source of the vocabulary, label names and ground truth when set.
    pub model: Option<PathBuf>,
    /// Training corpus for `fit`.
    pub corpus: Option<PathBuf>,
    /// Sequences to discover on and evaluate.
    pub dataset: Option<PathBuf>,
    /// `{label: [events]}` ground truth; defaults to the model's rules.
    pub truth: Option<PathBuf>,
    /// Vocabulary and label catalog for data without a model file.
    pub vocab: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    /// Fitted n-gram estimator; defaults to `out/estimator.json`.
    pub estimator: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateSection {
    pub train: usize,
    pub test: usize,
}

impl Default for GenerateSection {
    fn default() -> Self {
        Self { train: 10_000, test: 200 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NGramSection {
    pub order: usize,
    pub label_window: usize,
    pub alpha: f64,
}

impl Default for NGramSection {
    fn default() -> Self {
        Self { order: 2, label_window: 64, alpha: 0.5 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingSection {
    pub n_particles: usize,
    pub strategy: Strategy,
    pub k: usize,
    pub p: f64,
    pub temperature: Option<f64>,
    pub context_floor: usize,
    pub eps: f64,
}

impl Default for SamplingSection {
    fn default() -> Self {
        let d = SamplingConfig::default();
        Self {
            n_particles: d.n_particles,
            strategy: d.strategy,
            k: d.k,
            p: d.p,
            temperature: d.temperature,
            context_floor: d.context_floor,
            eps: d.eps,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdSection {
    pub z_coefficient: f64,
    pub min_cmi: f64,
}

impl Default for ThresholdSection {
    fn default() -> Self {
        let d = ThresholdConfig::default();
        Self { z_coefficient: d.z_coefficient, min_cmi: d.min_cmi }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub positives_only: bool,
    pub scope: TruthScope,
    /// Contiguous folds over the dataset; 1 skips the fold report.
    pub folds: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        let d = EvalOptions::default();
        Self { positives_only: d.positives_only, scope: d.scope, folds: 1 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub particles: Vec<usize>,
    pub batch_sizes: Vec<usize>,
    /// Sequences timed per point.
    pub sequences: usize,
    pub repeats: usize,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self { particles: vec![8, 16, 32, 64, 128], batch_sizes: vec![1, 4, 16, 64], sequences: 64, repeats: 3 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub backend: Backend,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub parallelism: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub paths: Paths,
    #[serde(default)]
    pub generate: GenerateSection,
    #[serde(default)]
    pub ngram: NGramSection,
    #[serde(default)]
    pub sampling: SamplingSection,
    #[serde(default)]
    pub threshold: ThresholdSection,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub bench: BenchSection,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            backend: Backend::default(),
            parallelism: 0,
            out: default_out(),
            paths: Paths::default(),
            generate: GenerateSection::default(),
            ngram: NGramSection::default(),
            sampling: SamplingSection::default(),
            threshold: ThresholdSection::default(),
            eval: EvalSection::default(),
            bench: BenchSection::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// TOML run configuration
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub n_particles: Option<usize>,
    /// none, permutation, top_k or top_k_nucleus
    #[arg(long, global = true)]
    pub strategy: Option<String>,
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub p: Option<f64>,
    #[arg(long, global = true)]
    pub temperature: Option<f64>,
    #[arg(long, global = true)]
    pub context_floor: Option<usize>,
    #[arg(long, global = true)]
    pub z_coeff: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub backend: Option<Backend>,
    #[arg(long, global = true)]
    pub parallelism: Option<usize>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// Reads the file named by `--config` (if any), resolves its relative
    /// paths, then applies the flags. Collects every problem before failing.
    pub fn load(o: &Overrides) -> Result<Self, Failure> {
        let mut cfg = match &o.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
                let mut cfg: RunConfig = toml::from_str(&text)
                    .map_err(|e| Failure::config(format!("{}: {}", path.display(), e.message())))?;
                let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
                cfg.resolve(&base);
                cfg
            }
            None => RunConfig::default(),
        };

        let mut problems = Vec::new();
        if let Some(s) = o.seed {
            cfg.seed = Some(s);
        }
        if let Some(n) = o.n_particles {
            cfg.sampling.n_particles = n;
        }
        if let Some(s) = &o.strategy {
            match s.parse::<Strategy>() {
                Ok(st) => cfg.sampling.strategy = st,
                Err(e) => problems.push(e.to_string()),
            }
        }
        if let Some(k) = o.k {
            cfg.sampling.k = k;
        }
        if let Some(p) = o.p {
            cfg.sampling.p = p;
        }
        if let Some(t) = o.temperature {
            cfg.sampling.temperature = Some(t);
        }
        if let Some(c) = o.context_floor {
            cfg.sampling.context_floor = c;
        }
        if let Some(z) = o.z_coeff {
            cfg.threshold.z_coefficient = z;
        }
        if let Some(b) = o.backend {
            cfg.backend = b;
        }
        if let Some(n) = o.parallelism {
            cfg.parallelism = n;
        }
        if let Some(out) = &o.out {
            cfg.out = out.clone();
        }

        problems.extend(cfg.violations());
        if problems.is_empty() {
            Ok(cfg)
        } else {
            Err(Failure::Config(problems))
        }
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.out);
        let paths = &mut self.paths;
        for p in [
            &mut paths.model,
            &mut paths.corpus,
            &mut paths.dataset,
            &mut paths.truth,
            &mut paths.vocab,
            &mut paths.labels,
            &mut paths.estimator,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.seed.is_none() {
            v.push("seed is required (set `seed` in the config or pass --seed)".to_string());
        }
        v.extend(self.sampling().violations().into_iter().map(|s| format!("sampling: {s}")));
        v.extend(self.threshold().violations().into_iter().map(|s| format!("threshold: {s}")));
        if let Err(e) = self.ngram().validate() {
            v.push(format!("ngram: {e}"));
        }
        if self.eval.folds < 1 {
            v.push("eval: folds must be at least 1".to_string());
        }
        if self.bench.particles.iter().any(|&n| n == 0) || self.bench.batch_sizes.iter().any(|&b| b == 0) {
            v.push("bench: particle counts and batch sizes must be positive".to_string());
        }
        if self.bench.repeats < 1 || self.bench.sequences < 1 {
            v.push("bench: repeats and sequences must be at least 1".to_string());
        }
        if self.paths.model.is_none() && (self.paths.vocab.is_none() || self.paths.labels.is_none()) {
            v.push("paths: set `model`, or both `vocab` and `labels`".to_string());
        }
        v
    }

    /// Problems with the inputs a command reads: each listed path must exist.
    pub fn require(&self, inputs: &[(&str, PathBuf)]) -> Result<(), Failure> {
        let missing: Vec<String> = inputs
            .iter()
            .filter(|(_, p)| !p.exists())
            .map(|(what, p)| format!("{what} not found: {}", p.display()))
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Failure::Config(missing))
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("validated")
    }

    pub fn sampling(&self) -> SamplingConfig {
        let s = &self.sampling;
        SamplingConfig {
            n_particles: s.n_particles,
            strategy: s.strategy,
            k: s.k,
            p: s.p,
            temperature: s.temperature,
            context_floor: s.context_floor,
            eps: s.eps,
            seed: self.seed.unwrap_or(0),
        }
    }

    pub fn threshold(&self) -> ThresholdConfig {
        ThresholdConfig { z_coefficient: self.threshold.z_coefficient, min_cmi: self.threshold.min_cmi }
    }

    pub fn ngram(&self) -> NGramConfig {
        NGramConfig { order: self.ngram.order, label_window: self.ngram.label_window, alpha: self.ngram.alpha }
    }

    pub fn eval_options(&self) -> EvalOptions {
        EvalOptions { positives_only: self.eval.positives_only, scope: self.eval.scope }
    }

    pub fn corpus_path(&self) -> PathBuf {
        self.paths.corpus.clone().unwrap_or_else(|| self.out.join("train.jsonl"))
    }

    pub fn dataset_path(&self) -> PathBuf {
        self.paths.dataset.clone().unwrap_or_else(|| self.out.join("test.jsonl"))
    }

    pub fn truth_path(&self) -> PathBuf {
        self.paths.truth.clone().unwrap_or_else(|| self.out.join("truth.json"))
    }

    pub fn estimator_path(&self) -> PathBuf {
        self.paths.estimator.clone().unwrap_or_else(|| self.out.join("estimator.json"))
    }

    pub fn discover_dir(&self) -> PathBuf {
        self.out.join("discover")
    }
}
