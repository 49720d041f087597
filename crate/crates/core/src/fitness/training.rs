//! Training data for a learned fitness model.
//!
//! Each record pairs a random target program with an unrelated random
//! candidate of the same length, the target's input-output examples, the
//! candidate's execution traces on those inputs, and the oracle labels.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{fitness_cf, fitness_lcs, LcsMode};
use crate::dsl::{
    input_type_for, random_program, random_value, run, DslError, Example, InputBounds, Program, Registry, Trace,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labels {
    pub cf: usize,
    pub lcs_subseq: usize,
    pub lcs_substr: usize,
    /// 1 iff the token id occurs in the target.
    pub membership: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub target: Program,
    pub candidate: Program,
    pub io: Vec<Example>,
    /// One trace of the candidate per example.
    pub traces: Vec<Trace>,
    pub labels: Labels,
}

impl TrainingRecord {
    pub fn labels_for(target: &Program, candidate: &Program, registry_len: usize) -> Labels {
        let mut membership = vec![0u8; registry_len];
        for t in target.tokens() {
            membership[t.index()] = 1;
        }
        Labels {
            cf: fitness_cf(candidate, target),
            lcs_subseq: fitness_lcs(candidate, target, LcsMode::Subsequence),
            lcs_substr: fitness_lcs(candidate, target, LcsMode::Substring),
            membership,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrainingConfig {
    pub count: usize,
    pub program_length: usize,
    pub examples_per_program: usize,
    pub bounds: InputBounds,
}

impl TrainingConfig {
    pub fn new(count: usize, program_length: usize) -> Self {
        TrainingConfig { count, program_length, examples_per_program: 5, bounds: InputBounds::default() }
    }
}

/// Generates `config.count` records. Degenerate specs (constant outputs) are kept.
pub fn generate_training_data<R: Rng + ?Sized>(
    config: &TrainingConfig,
    rng: &mut R,
    registry: &Registry,
) -> Result<Vec<TrainingRecord>, DslError> {
    if config.count == 0 || config.examples_per_program == 0 {
        return Err(DslError::Parse("count and examples per program must be at least 1".into()));
    }
    (0..config.count)
        .map(|_| generate_record(config, rng, registry))
        .collect()
}

fn generate_record<R: Rng + ?Sized>(config: &TrainingConfig, rng: &mut R, registry: &Registry) -> Result<TrainingRecord, DslError> {
    let target = random_program(config.program_length, rng, registry)?;
    let ty = input_type_for(&target, registry);
    let inputs: Vec<_> = (0..config.examples_per_program)
        .map(|_| random_value(ty, rng, &config.bounds))
        .collect();
    let candidate = random_program(config.program_length, rng, registry)?;
    let mut io = Vec::with_capacity(inputs.len());
    let mut traces = Vec::with_capacity(inputs.len());
    for input in inputs {
        let output = run(&target, &input, registry).pop().expect("non-empty program");
        traces.push(run(&candidate, &input, registry));
        io.push(Example { input, output });
    }
    let labels = TrainingRecord::labels_for(&target, &candidate, registry.len());
    Ok(TrainingRecord { target, candidate, io, traces, labels })
}

/// Writes one JSON object per line.
pub fn write_jsonl<W: Write>(records: &[TrainingRecord], mut writer: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut writer, r)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SeededRng;
    use rand::SeedableRng;

    #[test]
    fn deterministic() {
        let reg = Registry::deepcoder();
        let cfg = TrainingConfig::new(1, 4);
        let a = generate_training_data(&cfg, &mut SeededRng::seed_from_u64(5), &reg).unwrap();
        let b = generate_training_data(&cfg, &mut SeededRng::seed_from_u64(5), &reg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn records_are_consistent() {
        let reg = Registry::deepcoder();
        let cfg = TrainingConfig::new(200, 4);
        let records = generate_training_data(&cfg, &mut SeededRng::seed_from_u64(6), &reg).unwrap();
        for r in &records {
            assert_eq!(r.traces.len(), r.io.len());
            assert_eq!(r.io.len(), 5);
            assert_eq!(r.labels.cf, fitness_cf(&r.candidate, &r.target));
            for (ex, trace) in r.io.iter().zip(&r.traces) {
                assert_eq!(trace, &run(&r.candidate, &ex.input, &reg));
                assert_eq!(run(&r.target, &ex.input, &reg).last(), Some(&ex.output));
            }
            for t in reg.ids() {
                assert_eq!(r.labels.membership[t.index()] == 1, r.target.tokens().contains(&t));
            }
        }
    }

    #[test]
    fn mean_cf_is_between_extremes() {
        let reg = Registry::deepcoder();
        let cfg = TrainingConfig::new(1000, 4);
        let records = generate_training_data(&cfg, &mut SeededRng::seed_from_u64(7), &reg).unwrap();
        let mean = records.iter().map(|r| r.labels.cf as f64).sum::<f64>() / records.len() as f64;
        assert!(mean > 0.0 && mean < 4.0, "mean cf {mean}");
    }

    #[test]
    fn jsonl_keys() {
        let reg = Registry::deepcoder();
        let records = generate_training_data(&TrainingConfig::new(2, 3), &mut SeededRng::seed_from_u64(8), &reg).unwrap();
        let mut buf = Vec::new();
        write_jsonl(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        for key in ["target", "candidate", "io", "traces", "labels"] {
            assert!(first.get(key).is_some(), "missing {key}");
        }
        for key in ["cf", "lcs_subseq", "lcs_substr", "membership"] {
            assert!(first["labels"].get(key).is_some(), "missing labels.{key}");
        }
        let back: TrainingRecord = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(back, records[0]);
    }
}
