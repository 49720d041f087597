use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::metrics::{fitness_cf, fitness_fp, fitness_lcs, LcsMode, ProbabilityMap};
use crate::dsl::{Program, Spec, Trace};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("fitness model unavailable: {0}")]
    Unavailable(String),
    #[error("fitness model returned an error: {0}")]
    Remote(String),
    #[error("fitness model protocol violation: {0}")]
    Protocol(String),
}

/// Closeness metric against a known target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Cf,
    Lcs(LcsMode),
    Fp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ScoreKind {
    Cf,
    Lcs,
    Fp,
    Model,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessScore {
    pub value: f64,
    pub kind: ScoreKind,
}

/// Scores candidate programs; higher is closer to the (unknown) target.
///
/// Implementations must be deterministic for fixed inputs and state.
pub trait FitnessModel: Send + Sync {
    fn score(&self, spec: &Spec, candidate: &Program, traces: &[Trace]) -> Result<f64, ModelError>;

    /// Scores many candidates; `traces[i]` belongs to `candidates[i]`.
    fn score_batch(&self, spec: &Spec, candidates: &[Program], traces: &[Vec<Trace>]) -> Result<Vec<f64>, ModelError> {
        candidates
            .iter()
            .zip(traces)
            .map(|(c, t)| self.score(spec, c, t))
            .collect()
    }

    /// Token membership probabilities for the target of `spec`, if the model has them.
    fn pmap(&self, _spec: &Spec) -> Result<Option<ProbabilityMap>, ModelError> {
        Ok(None)
    }
}

/// Exact metric value of `candidate` against a known `target`.
pub fn oracle_fitness(_spec: &Spec, candidate: &Program, target: &Program, metric: Metric, registry_len: usize) -> FitnessScore {
    match metric {
        Metric::Cf => FitnessScore { value: fitness_cf(candidate, target) as f64, kind: ScoreKind::Cf },
        Metric::Lcs(mode) => FitnessScore { value: fitness_lcs(candidate, target, mode) as f64, kind: ScoreKind::Lcs },
        Metric::Fp => FitnessScore {
            value: fitness_fp(candidate, &ProbabilityMap::indicator(target, registry_len)),
            kind: ScoreKind::Fp,
        },
    }
}

/// Oracle fitness: scores candidates against the hidden target. Only usable
/// where the target is known (benchmarks, training).
#[derive(Debug, Clone)]
pub struct OracleFitness {
    target: Program,
    metric: Metric,
    indicator: ProbabilityMap,
}

impl OracleFitness {
    pub fn new(target: Program, metric: Metric, registry_len: usize) -> Self {
        let indicator = ProbabilityMap::indicator(&target, registry_len);
        OracleFitness { target, metric, indicator }
    }

    pub fn target(&self) -> &Program {
        &self.target
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }
}

impl FitnessModel for OracleFitness {
    fn score(&self, _spec: &Spec, candidate: &Program, _traces: &[Trace]) -> Result<f64, ModelError> {
        Ok(match self.metric {
            Metric::Cf => fitness_cf(candidate, &self.target) as f64,
            Metric::Lcs(mode) => fitness_lcs(candidate, &self.target, mode) as f64,
            Metric::Fp => fitness_fp(candidate, &self.indicator),
        })
    }

    /// Only the FP oracle exposes its map.
    fn pmap(&self, _spec: &Spec) -> Result<Option<ProbabilityMap>, ModelError> {
        Ok((self.metric == Metric::Fp).then(|| self.indicator.clone()))
    }
}

/// Gives every candidate the same score; the GA degenerates to uniform selection.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformFitness;

impl FitnessModel for UniformFitness {
    fn score(&self, _spec: &Spec, _candidate: &Program, _traces: &[Trace]) -> Result<f64, ModelError> {
        Ok(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{Example, Registry, Value};

    fn setup() -> (Registry, Spec, Program, Program) {
        let reg = Registry::deepcoder().extended(&["DROP(2)"]).unwrap();
        let target = Program::parse("FILTER(>0),MAP(*2),SORT,REVERSE", &reg).unwrap();
        let cand = Program::parse("FILTER(>0),MAP(*2),REVERSE,DROP(2)", &reg).unwrap();
        let spec = Spec::new(vec![Example::new(
            Value::List(vec![-2, 10, 3, -4, 5, 2]),
            Value::List(vec![20, 10, 6, 4]),
        )])
        .unwrap();
        (reg, spec, target, cand)
    }

    #[test]
    fn oracle_metrics_on_worked_example() {
        let (reg, spec, target, cand) = setup();
        let cf = oracle_fitness(&spec, &cand, &target, Metric::Cf, reg.len());
        assert_eq!(cf, FitnessScore { value: 3.0, kind: ScoreKind::Cf });
        let lcs = oracle_fitness(&spec, &target, &target, Metric::Lcs(LcsMode::Substring), reg.len());
        assert_eq!(lcs.value, 4.0);
        let fp = oracle_fitness(&spec, &cand, &target, Metric::Fp, reg.len());
        assert_eq!(fp.value, cf.value);
    }

    #[test]
    fn oracle_model_matches_function() {
        let (reg, spec, target, cand) = setup();
        for metric in [Metric::Cf, Metric::Lcs(LcsMode::Subsequence), Metric::Fp] {
            let model = OracleFitness::new(target.clone(), metric, reg.len());
            assert_eq!(
                model.score(&spec, &cand, &[]).unwrap(),
                oracle_fitness(&spec, &cand, &target, metric, reg.len()).value
            );
        }
        let fp = OracleFitness::new(target.clone(), Metric::Fp, reg.len());
        assert!(fp.pmap(&spec).unwrap().is_some());
        let cf = OracleFitness::new(target, Metric::Cf, reg.len());
        assert!(cf.pmap(&spec).unwrap().is_none());
    }
}
