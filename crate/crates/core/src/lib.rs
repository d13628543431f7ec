//! Per-sequence Markov boundary discovery for multi-label event sequences.
//!
//! Given a sequence of discrete events and a set of binary labels observed
//! after it, the engine asks, for every event occurrence and every label,
//! how much observing that occurrence changes the label distribution once
//! the preceding context is averaged over resampled particles. Occurrences
//! whose conditional mutual information stands out against the rest of the
//! sequence form the label's Markov boundary.
//!
//! ```
//! use oscar_core::density::oracle_pair;
//! use oscar_core::engine::{discover, SamplingConfig, Strategy, ThresholdConfig};
//! use oscar_core::synthgen::{GeneratorModel, LabelRule, LengthSpec, Literal};
//! use oscar_core::types::{EventVocabulary, LabelCatalog, LabeledSequence};
//!
//! let model = GeneratorModel::new(
//!     EventVocabulary::with_marker("<bos>", ["a", "b", "c", "d"]).unwrap(),
//!     LabelCatalog::new(vec!["y".into()]).unwrap(),
//!     GeneratorModel::uniform_transition(5),
//!     LengthSpec::Fixed(8),
//!     vec![LabelRule::all_of(0, [Literal::pos(2)]).unwrap()],
//!     vec![],
//!     7,
//! )
//! .unwrap();
//! let pair = oracle_pair::<f64>(&model).unwrap();
//! let seq = LabeledSequence::from_events(&[1, 3, 1, 2, 3, 1, 3, 1], vec![true]).unwrap();
//! let cfg = SamplingConfig { strategy: Strategy::None, context_floor: 1, ..Default::default() };
//! let result = discover(&pair, &seq, &cfg, &ThresholdConfig::new(2.0)).unwrap();
//! assert_eq!(result.markov_boundary(0).iter().copied().collect::<Vec<_>>(), vec![2]);
//! ```

pub mod density;
pub mod engine;
pub mod error;
pub mod eval;
pub mod io;
pub mod rng;
pub mod scalar;
pub mod synthgen;
pub mod types;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use types::{
    CausalEdge, CausalGraph, EventId, EventOccurrence, EventVocabulary, GraphNode, LabelCatalog, LabelId,
    LabeledSequence, MarkovBoundarySet, BEGIN_MARKER,
};

/// Double-precision aliases.
pub type Estimator = density::EstimatorPair<f64>;
pub type Cmi = engine::CmiMatrix<f64>;
pub type Discovery = engine::DiscoveryResult<f64>;
pub type Distribution = density::CategoricalDistribution<f64>;
pub type Edge = types::CausalEdge<f64>;
pub type Graph = types::CausalGraph<f64>;

/// Single-precision aliases.
pub type Estimator32 = density::EstimatorPair<f32>;
pub type Cmi32 = engine::CmiMatrix<f32>;
pub type Discovery32 = engine::DiscoveryResult<f32>;
pub type Distribution32 = density::CategoricalDistribution<f32>;
pub type Edge32 = types::CausalEdge<f32>;
pub type Graph32 = types::CausalGraph<f32>;
