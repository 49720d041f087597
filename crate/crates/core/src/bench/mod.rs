//! Benchmark problems, engine configurations and the run harness.

mod engine;
mod harness;

use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cma::CmaError;
use crate::dsl::{
    effective_length, input_type_for, random_program, random_value, satisfies, DslError, InputBounds, Program, Registry,
    Spec, GENERATION_ATTEMPTS,
};
use crate::fitness::ModelError;
use crate::ga::GaError;

pub use engine::{build_model, run_engine, BinMode, EngineConfig, FitnessKind};
pub use harness::{aggregate, run_benchmark, run_seed, write_csv, Aggregate, BenchOptions, BenchRow, EngineSummary};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Dsl(#[from] DslError),
    #[error(transparent)]
    Ga(#[from] GaError),
    #[error(transparent)]
    Cma(#[from] CmaError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{0}")]
    Invalid(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// A target program with its examples. Engines other than oracle fitness
/// only see the examples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub id: String,
    pub length: usize,
    pub target: Program,
    pub spec: Spec,
}

impl Problem {
    /// Target satisfies its spec and has no dead code.
    pub fn check(&self, registry: &Registry) -> Result<(), BenchError> {
        if !satisfies(&self.target, &self.spec, registry)? {
            return Err(BenchError::Invalid(format!("problem {}: target does not satisfy its spec", self.id)));
        }
        if effective_length(&self.target, registry) != self.length {
            return Err(BenchError::Invalid(format!("problem {}: target effective length differs from {}", self.id, self.length)));
        }
        Ok(())
    }
}

/// `n` problems of length `l` with `m` examples each. Specs whose outputs are
/// all one and the same value are redrawn.
pub fn generate_problems<R: Rng + ?Sized>(
    n: usize,
    length: usize,
    examples: usize,
    rng: &mut R,
    registry: &Registry,
) -> Result<Vec<Problem>, BenchError> {
    if n == 0 || examples == 0 {
        return Err(BenchError::Invalid("need at least one problem and one example".into()));
    }
    let bounds = InputBounds::default();
    let width = n.to_string().len().max(4);
    (0..n)
        .map(|i| {
            for _ in 0..GENERATION_ATTEMPTS {
                let target = random_program(length, rng, registry)?;
                let ty = input_type_for(&target, registry);
                let inputs = (0..examples).map(|_| random_value(ty, rng, &bounds)).collect();
                let spec = Spec::from_program(&target, inputs, registry)?;
                let outs = spec.examples();
                if outs.len() > 1 && outs.iter().all(|e| e.output == outs[0].output) {
                    continue;
                }
                return Ok(Problem { id: format!("p{i:0width$}"), length, target, spec });
            }
            Err(DslError::GenerationExhausted { attempts: GENERATION_ATTEMPTS, length }.into())
        })
        .collect()
}

pub fn write_problems<W: Write>(problems: &[Problem], mut out: W) -> Result<(), BenchError> {
    for p in problems {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads JSON-lines problems and checks each against `registry`.
pub fn read_problems<R: BufRead>(input: R, registry: &Registry) -> Result<Vec<Problem>, BenchError> {
    let mut problems = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let p: Problem = serde_json::from_str(&line)?;
        p.check(registry)?;
        problems.push(p);
    }
    Ok(problems)
}
