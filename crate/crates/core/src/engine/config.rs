use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How particle contexts are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// The observed context only; a single particle.
    None,
    /// Shuffle the context steps, keeping the begin marker in place.
    Permutation,
    /// Draw each context step from the `k` most probable events.
    TopK,
    /// Top-k, then the smallest probability-sorted prefix whose mass exceeds `p`.
    TopKNucleus,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::None, Strategy::Permutation, Strategy::TopK, Strategy::TopKNucleus];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::None => "none",
            Strategy::Permutation => "permutation",
            Strategy::TopK => "top_k",
            Strategy::TopKNucleus => "top_k_nucleus",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown strategy `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub n_particles: usize,
    pub strategy: Strategy,
    pub k: usize,
    pub p: f64,
    pub temperature: Option<f64>,
    /// Steps `1..context_floor` form the resampled context; CMI is computed
    /// for steps `context_floor..=L`.
    pub context_floor: usize,
    /// CMI probabilities are clamped into `[eps, 1 - eps]`.
    pub eps: f64,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            n_particles: 68,
            strategy: Strategy::TopKNucleus,
            k: 35,
            p: 0.8,
            temperature: None,
            context_floor: 15,
            eps: 1e-6,
            seed: 0,
        }
    }
}

impl SamplingConfig {
    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn with_particles(mut self, n: usize) -> Self {
        self.n_particles = n;
        self
    }

    pub fn with_context_floor(mut self, c: usize) -> Self {
        self.context_floor = c;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Particle count actually used: always one for [`Strategy::None`].
    pub fn effective_particles(&self) -> usize {
        match self.strategy {
            Strategy::None => 1,
            _ => self.n_particles,
        }
    }

    /// Every violated constraint, joined.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.n_particles < 1 {
            v.push("n_particles must be at least 1".to_string());
        }
        if self.k < 1 {
            v.push("k must be at least 1".to_string());
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            v.push(format!("p must lie in (0, 1], got {}", self.p));
        }
        if let Some(t) = self.temperature {
            if !(t > 0.0) || !t.is_finite() {
                v.push(format!("temperature must be positive, got {t}"));
            }
        }
        if self.context_floor < 1 {
            v.push("context_floor must be at least 1".to_string());
        }
        if !(self.eps > 0.0 && self.eps < 0.5) {
            v.push(format!("eps must lie in (0, 0.5), got {}", self.eps));
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v.join("; ")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig {
    pub z_coefficient: f64,
    /// A position is retained only when its CMI also exceeds this floor, so
    /// an all-zero vector retains nothing.
    pub min_cmi: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self { z_coefficient: 2.75, min_cmi: 1e-9 }
    }
}

impl ThresholdConfig {
    pub fn new(z_coefficient: f64) -> Self {
        Self { z_coefficient, ..Self::default() }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.z_coefficient >= 0.0) || !self.z_coefficient.is_finite() {
            v.push(format!("z_coefficient must be a nonnegative number, got {}", self.z_coefficient));
        }
        if !(self.min_cmi >= 0.0) || !self.min_cmi.is_finite() {
            v.push(format!("min_cmi must be a nonnegative number, got {}", self.min_cmi));
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v.join("; ")))
        }
    }
}
