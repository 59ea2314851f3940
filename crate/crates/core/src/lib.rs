//! Directed configuration model toolkit.
//!
//! Predicts the order and size of the largest strongly connected component
//! from branching-process fixed points of a bi-degree distribution. Random
//! digraphs built by half-edge pairing let seeded Monte Carlo runs check the
//! prediction against the realized giant.

#![forbid(unsafe_code)]

pub mod branching;
pub mod criticality;
pub mod degree_model;
pub mod error;
pub mod experiment;
pub mod exploration;
pub mod generator;
pub mod io;
pub mod scc;

pub use branching::{ExpansionOutcome, ExpansionTrial, GenerationRun, OffspringLaw};
pub use criticality::{CriticalityReport, Regime};
pub use degree_model::{
    BiDegreeDistribution, BiDegreeSequence, Direction, DistributionSpec, Moments, SizeBiasedLaw,
    UnivariateLaw,
};
pub use error::{Error, Result};
pub use experiment::{ExperimentConfig, ExperimentOutcome, GraphMode, OmegaPolicy, TrialRecord};
pub use exploration::{CoreCriterion, ExpansionProfile, LinearCore, Traversal};
pub use generator::Digraph;
pub use scc::{CycleCensus, SccReport};

/// Seeded stream type used throughout; ChaCha output is identical on every platform.
pub type Stream = rand_chacha::ChaCha8Rng;

/// Builds a stream from a 64-bit seed.
pub fn stream_from_seed(seed: u64) -> Stream {
    use rand::SeedableRng;
    Stream::seed_from_u64(seed)
}
