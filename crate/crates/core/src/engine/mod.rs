//! Per-sequence Markov boundary discovery: particle contexts, Monte-Carlo
//! CMI, dynamic thresholds and causal-indicator statistics.

pub mod cmi;
pub mod config;
pub mod discover;
pub mod sampling;

pub use cmi::{bernoulli_kl, causal_indicator, estimate_cmi, estimate_from_particles, info_gain, info_gain_cap, CmiMatrix};
pub use config::{SamplingConfig, Strategy, ThresholdConfig};
pub use discover::{discover, discover_batch, dynamic_threshold, select, threshold_or_mean, DiscoveryResult, LabelDiscovery};
pub use sampling::{apply_temperature, sample_particles, sampling_distribution, top_k, top_k_nucleus, ParticleSet};
