use serde::{Deserialize, Serialize};

use super::GaError;
use crate::dsl::{run, Program, Registry, Spec, Trace};
use crate::fitness::FitnessModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NsMode {
    /// Every single-token replacement of every top gene.
    #[default]
    Bfs,
    /// Position by position, keeping the model's favourite variant before
    /// moving to the next position.
    Dfs,
}

impl std::str::FromStr for NsMode {
    type Err = GaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bfs" => Ok(NsMode::Bfs),
            "dfs" => Ok(NsMode::Dfs),
            other => Err(GaError::Config(format!("unknown neighborhood mode `{other}`"))),
        }
    }
}

fn traces_of(p: &Program, spec: &Spec, registry: &Registry) -> Vec<Trace> {
    spec.inputs().map(|i| run(p, i, registry)).collect()
}

fn matches(traces: &[Trace], spec: &Spec) -> bool {
    traces
        .iter()
        .zip(spec.examples())
        .all(|(t, e)| t.last() == Some(&e.output))
}

/// Searches the single-replacement neighborhood of `top` for a program that
/// satisfies `spec`. The unmodified genes themselves are not tested.
///
/// In BFS mode a miss costs exactly `N * L * (|Σ| - 1)` evaluations, counted
/// into `evaluations`.
pub fn neighborhood_search(
    top: &[Program],
    spec: &Spec,
    mode: NsMode,
    model: &dyn FitnessModel,
    registry: &Registry,
    evaluations: &mut u64,
) -> Result<Option<Program>, GaError> {
    for gene in top {
        gene.validate(registry)?;
        let found = match mode {
            NsMode::Bfs => bfs(gene, spec, registry, evaluations),
            NsMode::Dfs => dfs(gene, spec, model, registry, evaluations)?,
        };
        if found.is_some() {
            return Ok(found);
        }
    }
    Ok(None)
}

fn bfs(gene: &Program, spec: &Spec, registry: &Registry, evaluations: &mut u64) -> Option<Program> {
    for pos in 0..gene.len() {
        for op in registry.ids() {
            if op == gene.tokens()[pos] {
                continue;
            }
            let candidate = gene.with_token(pos, op);
            *evaluations += 1;
            if matches(&traces_of(&candidate, spec, registry), spec) {
                return Some(candidate);
            }
        }
    }
    None
}

fn dfs(
    gene: &Program,
    spec: &Spec,
    model: &dyn FitnessModel,
    registry: &Registry,
    evaluations: &mut u64,
) -> Result<Option<Program>, GaError> {
    let mut working = gene.clone();
    for pos in 0..working.len() {
        let level: Vec<Program> = registry
            .ids()
            .filter(|&op| op != working.tokens()[pos])
            .map(|op| working.with_token(pos, op))
            .collect();
        let mut traces = Vec::with_capacity(level.len());
        for candidate in &level {
            let t = traces_of(candidate, spec, registry);
            *evaluations += 1;
            if matches(&t, spec) {
                return Ok(Some(candidate.clone()));
            }
            traces.push(t);
        }
        let scores = model.score_batch(spec, &level, &traces)?;
        let mut best = 0;
        for (i, s) in scores.iter().enumerate() {
            if *s > scores[best] {
                best = i;
            }
        }
        working = level[best].clone();
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{random_program, satisfies, Value};
    use crate::fitness::UniformFitness;
    use crate::SeededRng;
    use rand::{Rng, SeedableRng};

    fn spec_for(target: &Program, reg: &Registry, rng: &mut SeededRng) -> Spec {
        let inputs = (0..5)
            .map(|_| Value::List((0..8).map(|_| rng.random_range(-20..=20)).collect()))
            .collect();
        Spec::from_program(target, inputs, reg).unwrap()
    }

    #[test]
    fn bfs_finds_hamming_neighbours() {
        let reg = Registry::deepcoder();
        let mut rng = SeededRng::seed_from_u64(13);
        for _ in 0..30 {
            let target = random_program(3, &mut rng, &reg).unwrap();
            let spec = spec_for(&target, &reg, &mut rng);
            let pos = rng.random_range(0..3);
            let mut other = rng.random_range(0..reg.len());
            while other == target.tokens()[pos].index() {
                other = rng.random_range(0..reg.len());
            }
            let gene = target.with_token(pos, other.into());
            let mut evals = 0;
            let found = neighborhood_search(&[gene], &spec, NsMode::Bfs, &UniformFitness, &reg, &mut evals)
                .unwrap()
                .expect("target is one replacement away");
            assert!(satisfies(&found, &spec, &reg).unwrap());
        }
    }

    #[test]
    fn bfs_miss_costs_exactly_n_l_sigma_minus_one() {
        let reg = Registry::deepcoder();
        // output no single replacement of these genes can produce
        let spec = Spec::new(vec![crate::dsl::Example::new(
            Value::List(vec![1, 2, 3]),
            Value::List(vec![99, 98, 97, 96]),
        )])
        .unwrap();
        let top = vec![
            Program::parse("SORT,REVERSE,MAP(+1),MAP(*2)", &reg).unwrap(),
            Program::parse("FILTER(>0),SORT,MAP(*3),REVERSE", &reg).unwrap(),
        ];
        let mut evals = 0;
        let found = neighborhood_search(&top, &spec, NsMode::Bfs, &UniformFitness, &reg, &mut evals).unwrap();
        assert!(found.is_none());
        assert_eq!(evals, 2 * 4 * 37);
    }

    #[test]
    fn unmodified_gene_is_not_tested() {
        let reg = Registry::deepcoder();
        let target = Program::parse("SORT", &reg).unwrap();
        let spec = Spec::from_program(&target, vec![Value::List(vec![3, 1, 2])], &reg).unwrap();
        let mut evals = 0;
        // every other single token: none sorts [3,1,2]
        let found = neighborhood_search(&[target], &spec, NsMode::Bfs, &UniformFitness, &reg, &mut evals).unwrap();
        assert!(found.is_none());
        assert_eq!(evals, 37);
    }

    /// Positions agreeing with a fixed target.
    struct Hamming(Program);

    impl FitnessModel for Hamming {
        fn score(&self, _: &Spec, c: &Program, _: &[Trace]) -> Result<f64, crate::fitness::ModelError> {
            Ok(c.tokens().iter().zip(self.0.tokens()).filter(|(a, b)| a == b).count() as f64)
        }
    }

    #[test]
    fn dfs_fixes_one_position_per_level() {
        let reg = Registry::deepcoder();
        let mut rng = SeededRng::seed_from_u64(17);
        for _ in 0..20 {
            let target = random_program(3, &mut rng, &reg).unwrap();
            let spec = spec_for(&target, &reg, &mut rng);
            // every position wrong: far out of BFS reach
            let mut gene = target.clone();
            for pos in 0..3 {
                let t = gene.tokens()[pos].index();
                gene = gene.with_token(pos, ((t + 1) % reg.len()).into());
            }
            let mut evals = 0;
            let found = neighborhood_search(&[gene], &spec, NsMode::Dfs, &Hamming(target), &reg, &mut evals)
                .unwrap()
                .expect("one correct position per level");
            assert!(satisfies(&found, &spec, &reg).unwrap());
            assert!(evals <= 3 * 37);
        }
    }

    #[test]
    fn dfs_without_a_hit_spends_l_levels() {
        let reg = Registry::deepcoder();
        let spec = Spec::new(vec![crate::dsl::Example::new(
            Value::List(vec![1, 2, 3]),
            Value::List(vec![99, 98, 97, 96]),
        )])
        .unwrap();
        let gene = Program::parse("SORT,REVERSE,MAP(+1)", &reg).unwrap();
        let mut evals = 0;
        let found = neighborhood_search(&[gene], &spec, NsMode::Dfs, &UniformFitness, &reg, &mut evals).unwrap();
        assert!(found.is_none());
        assert_eq!(evals, 3 * 37);
    }
}
