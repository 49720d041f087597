//! Genetic search over fixed-length token sequences.
//!
//! Genes are ranked by a [`FitnessModel`](crate::fitness::FitnessModel); a
//! fraction of the best pass unchanged into the next generation and the rest
//! come from roulette-selected crossover and model-guided mutation. Children
//! that would contain dead code are regenerated. When the mean fitness stops
//! improving, a neighborhood search tries every single-token replacement of
//! the top genes.

mod neighborhood;
mod operators;
mod search;

use std::time::Duration;

use thiserror::Error;

use crate::dsl::{DslError, Program};
use crate::fitness::ModelError;

pub use neighborhood::{neighborhood_search, NsMode};
pub use operators::{crossover, crossover_at, crossover_child, mutate, select_parent, SELECTION_EPSILON};
pub use search::{init_population, rank, synthesize_ga, GaRun};

#[derive(Debug, Error)]
pub enum GaError {
    #[error(transparent)]
    Dsl(#[from] DslError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaConfig {
    /// Genes per generation.
    pub population_size: usize,
    pub program_length: usize,
    /// Share of the ranked population copied unchanged.
    pub elite_fraction: f64,
    /// Share of the non-elite slots filled by crossover; the rest by mutation.
    pub crossover_share: f64,
    /// How many top genes the neighborhood search expands.
    pub top_n: usize,
    /// Sliding window of the saturation test.
    pub window: usize,
    pub ns_mode: NsMode,
    /// Generations to evaluate before giving up.
    pub max_generations: Option<u64>,
    pub time_budget: Option<Duration>,
    pub seed: u64,
}

impl GaConfig {
    pub fn new(program_length: usize) -> Self {
        GaConfig {
            population_size: 100,
            program_length,
            elite_fraction: 0.20,
            crossover_share: 0.7,
            top_n: 3,
            window: 5,
            ns_mode: NsMode::Bfs,
            max_generations: None,
            time_budget: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), GaError> {
        let bad = |msg: &str| Err(GaError::Config(msg.to_string()));
        if !(self.elite_fraction > 0.0 && self.elite_fraction < 1.0) {
            return bad("elite fraction must lie strictly between 0 and 1");
        }
        if !(0.0..=1.0).contains(&self.crossover_share) {
            return bad("crossover share must lie in [0, 1]");
        }
        if self.population_size < 4 {
            return bad("population size must be at least 4");
        }
        if self.window < 1 {
            return bad("window must be at least 1");
        }
        if self.top_n < 1 {
            return bad("top-N must be at least 1");
        }
        if self.program_length == 0 || self.program_length > crate::dsl::MAX_PROGRAM_LENGTH {
            return bad("program length out of range");
        }
        Ok(())
    }

    /// Number of elite genes, `ceil(elite_fraction * T)`.
    pub fn elite_count(&self) -> usize {
        ((self.elite_fraction * self.population_size as f64).ceil() as usize).min(self.population_size)
    }
}

/// Genes with parallel scores, sorted best first once ranked.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPopulation {
    pub genes: Vec<Program>,
    pub scores: Vec<f64>,
}

impl ScoredPopulation {
    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    pub fn mean_score(&self) -> f64 {
        if self.scores.is_empty() {
            0.0
        } else {
            self.scores.iter().sum::<f64>() / self.scores.len() as f64
        }
    }
}

/// Mean score of every completed generation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitnessHistory(Vec<f64>);

impl FitnessHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, mean: f64) {
        self.0.push(mean);
    }

    pub fn clear(&mut self) {
        self.0.clear();
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for FitnessHistory {
    fn from(v: Vec<f64>) -> Self {
        FitnessHistory(v)
    }
}

/// Saturation test: the mean of the last `w` generation means is no better
/// than the mean of all earlier ones. Needs more than `w` generations.
pub fn ns_trigger(history: &FitnessHistory, w: usize) -> bool {
    let h = history.as_slice();
    if w == 0 || h.len() <= w {
        return false;
    }
    let (early, recent) = h.split_at(h.len() - w);
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    mean(recent) <= mean(early)
}
