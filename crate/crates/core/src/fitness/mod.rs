//! Fitness: closeness metrics, oracle and external models, and training data.

mod external;
mod metrics;
mod model;
mod training;

pub use external::{ModelClient, Op, Request, Response, MAX_BATCH};
pub use metrics::{elems, fitness_cf, fitness_fp, fitness_lcs, LcsMode, ProbabilityMap};
pub use model::{oracle_fitness, FitnessModel, FitnessScore, Metric, ModelError, OracleFitness, ScoreKind, UniformFitness};
pub use training::{generate_training_data, write_jsonl, Labels, TrainingConfig, TrainingRecord};
