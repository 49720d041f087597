//! Program synthesis for a small list-manipulation DSL from input-output
//! examples.
//!
//! Two search engines share one interpreter:
//!
//! * [`ga`]: a genetic algorithm ranked by a pluggable fitness model, with
//!   dead-code-aware crossover/mutation and local neighborhood search.
//! * [`cma`]: CMA-ES over real vectors that [`cma::MappingScheme`]s decode
//!   into programs, with stall detection and restart policies.
//!
//! [`fitness`] holds the closeness metrics and training-data generation,
//! [`bench`] the problem generator and benchmark harness.

pub mod bench;
pub mod cma;
pub mod dsl;
pub mod fitness;
pub mod ga;
pub mod report;

/// Reproducible RNG used everywhere a seed is accepted.
pub type SeededRng = rand_chacha::ChaCha8Rng;

pub use report::SynthesisReport;
