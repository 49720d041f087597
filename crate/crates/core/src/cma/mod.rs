//! CMA-ES program search.
//!
//! A [`MappingScheme`] turns real vectors into programs. The strategy samples
//! vectors, scores the decoded programs by their output distance to the examples
//! and adapts mean, covariance and step size. When the distribution
//! degenerates it is restarted under a [`RestartPolicy`].

mod mapping;
mod objective;
mod search;
mod state;

use thiserror::Error;

use crate::dsl::DslError;

pub use mapping::{normal_quantile, MappingScheme, SchemeKind};
pub use objective::{levenshtein, output_distance, program_error, INT_DISTANCE_CAP, TYPE_MISMATCH_PENALTY};
pub use search::{synthesize_cma, CmaConfig};
pub use state::{default_lambda, CmaParams, CmaState, RestartPolicy, StallReason, MAX_LAMBDA_FACTOR};

#[derive(Debug, Error)]
pub enum CmaError {
    #[error("step size must be positive and finite, got {0}")]
    NonPositiveSigma(f64),
    #[error("expected {expected} samples and errors, got {samples} and {errors}")]
    LambdaMismatch { expected: usize, samples: usize, errors: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("covariance matrix could not be decomposed")]
    Decomposition,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Dsl(#[from] DslError),
}
