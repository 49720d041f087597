use rand::Rng;

use super::{GaError, ScoredPopulation};
use crate::dsl::{effective_length, run, Program, Registry, Spec, TokenId, Trace};
use crate::fitness::{FitnessModel, ProbabilityMap};

/// Added to every shifted score so zero-score genes stay selectable.
pub const SELECTION_EPSILON: f64 = 1e-6;
/// Attempts at a dead-code-free child before falling back.
const RETRIES: usize = 100;
/// Upper bound on model-scored mutation candidates.
const MAX_MUTATION_CANDIDATES: usize = 16;

/// Roulette-wheel pick; weight of gene `i` is `score_i - min + ε`.
pub fn select_parent<R: Rng + ?Sized>(scored: &ScoredPopulation, rng: &mut R) -> usize {
    assert!(!scored.is_empty(), "cannot select from an empty population");
    let min = scored.scores.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = scored.scores.iter().map(|s| s - min + SELECTION_EPSILON).collect();
    roulette(&weights, rng)
}

/// Index drawn proportionally to `weights` (all non-negative, not all zero).
pub(crate) fn roulette<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut r = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if r < *w {
            return i;
        }
        r -= w;
    }
    // rounding left r at the very end; return the last positive weight
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(weights.len() - 1)
}

/// `a[..c] ++ b[c..]`.
pub fn crossover_at(a: &Program, b: &Program, c: usize) -> Program {
    assert_eq!(a.len(), b.len(), "parents must have equal length");
    let tokens: Vec<TokenId> = a.tokens()[..c].iter().chain(&b.tokens()[c..]).copied().collect();
    Program::new(tokens)
}

/// Single-point crossover with the cut uniform in `1..L` (`L = 1` copies `a`).
pub fn crossover<R: Rng + ?Sized>(a: &Program, b: &Program, rng: &mut R) -> Program {
    let len = a.len();
    let c = if len <= 1 { len } else { rng.random_range(1..len) };
    crossover_at(a, b, c)
}

/// Crossover child of two roulette-selected parents with no dead code.
///
/// Parents are reselected on every attempt. After the retry budget the better
/// parent of the last pair is copied.
pub fn crossover_child<R: Rng + ?Sized>(scored: &ScoredPopulation, rng: &mut R, registry: &Registry) -> Program {
    let len = scored.genes[0].len();
    let mut last = (0, 0);
    for _ in 0..RETRIES {
        let (i, j) = (select_parent(scored, rng), select_parent(scored, rng));
        last = (i, j);
        let child = crossover(&scored.genes[i], &scored.genes[j], rng);
        if effective_length(&child, registry) == len {
            return child;
        }
    }
    let (i, j) = last;
    let better = if scored.scores[j] > scored.scores[i] { j } else { i };
    scored.genes[better].clone()
}

/// Replacement token for position `k`: roulette over the map (excluding the
/// current token), uniform when there is no map or it gives no mass.
fn replacement<R: Rng + ?Sized>(current: TokenId, pmap: Option<&ProbabilityMap>, rng: &mut R, registry: &Registry) -> TokenId {
    if let Some(pm) = pmap {
        let weights: Vec<f64> = registry
            .ids()
            .map(|t| if t == current { 0.0 } else { pm.get(t) })
            .collect();
        if weights.iter().sum::<f64>() > 0.0 {
            return TokenId::from(roulette(&weights, rng));
        }
    }
    let r = rng.random_range(0..registry.len() - 1);
    TokenId::from(if r >= current.index() { r + 1 } else { r })
}

/// Model-guided single-point mutation.
///
/// Draws `min(2L, 16)` (position, replacement) pairs, scores the dead-code-free
/// mutants with the model and returns the best (first on ties). Without any
/// valid candidate a uniformly random valid mutant is tried, and after that
/// the gene comes back unchanged. `evaluations` counts program executions.
#[allow(clippy::too_many_arguments)]
pub fn mutate<R: Rng + ?Sized>(
    gene: &Program,
    rng: &mut R,
    model: &dyn FitnessModel,
    pmap: Option<&ProbabilityMap>,
    spec: &Spec,
    registry: &Registry,
    evaluations: &mut u64,
) -> Result<Program, GaError> {
    let len = gene.len();
    let k_max = (2 * len).min(MAX_MUTATION_CANDIDATES);
    let mut valid = Vec::with_capacity(k_max);
    for _ in 0..k_max {
        let pos = rng.random_range(0..len);
        let mutant = gene.with_token(pos, replacement(gene.tokens()[pos], pmap, rng, registry));
        if effective_length(&mutant, registry) == len {
            valid.push(mutant);
        }
    }
    if !valid.is_empty() {
        let traces: Vec<Vec<Trace>> = valid
            .iter()
            .map(|m| spec.inputs().map(|i| run(m, i, registry)).collect())
            .collect();
        *evaluations += valid.len() as u64;
        let scores = model.score_batch(spec, &valid, &traces)?;
        let mut best = 0;
        for (i, s) in scores.iter().enumerate() {
            if *s > scores[best] {
                best = i;
            }
        }
        return Ok(valid.swap_remove(best));
    }
    for _ in 0..RETRIES {
        let pos = rng.random_range(0..len);
        let mutant = gene.with_token(pos, replacement(gene.tokens()[pos], None, rng, registry));
        if effective_length(&mutant, registry) == len {
            return Ok(mutant);
        }
    }
    Ok(gene.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{random_program, Example, Value};
    use crate::fitness::{Metric, OracleFitness, UniformFitness};
    use crate::SeededRng;
    use rand::SeedableRng;

    fn pop(scores: Vec<f64>) -> ScoredPopulation {
        let genes = (0..scores.len()).map(|i| Program::from_indices([i])).collect();
        ScoredPopulation { genes, scores }
    }

    #[test]
    fn equal_scores_select_uniformly() {
        // chi-square goodness of fit, 9 degrees of freedom; critical value at p = 0.01 is 21.666
        let p = pop(vec![2.0; 10]);
        let mut rng = SeededRng::seed_from_u64(11);
        let mut counts = [0usize; 10];
        let draws = 10_000;
        for _ in 0..draws {
            counts[select_parent(&p, &mut rng)] += 1;
        }
        let expected = draws as f64 / 10.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 21.666, "chi2 = {chi2}, counts {counts:?}");
    }

    #[test]
    fn dominant_gene_wins() {
        let p = pop(vec![0.0, 0.0, 1.0, 0.0]);
        let mut rng = SeededRng::seed_from_u64(1);
        let hits = (0..10_000).filter(|_| select_parent(&p, &mut rng) == 2).count();
        assert!(hits >= 9_990, "{hits}");
    }

    #[test]
    fn seeded_draws_reproduce() {
        let p = pop(vec![0.5, 1.0, 3.0, 0.1]);
        let a: Vec<usize> = {
            let mut rng = SeededRng::seed_from_u64(3);
            (0..50).map(|_| select_parent(&p, &mut rng)).collect()
        };
        let b: Vec<usize> = {
            let mut rng = SeededRng::seed_from_u64(3);
            (0..50).map(|_| select_parent(&p, &mut rng)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn crossover_basics() {
        let a = Program::from_indices([1, 2, 3, 4]);
        let mut rng = SeededRng::seed_from_u64(0);
        for _ in 0..20 {
            assert_eq!(crossover(&a, &a, &mut rng), a);
        }
        let (x, y) = (Program::from_indices([5, 6]), Program::from_indices([7, 8]));
        assert_eq!(crossover_at(&x, &y, 1), Program::from_indices([5, 8]));
        assert_eq!(crossover(&x, &y, &mut rng), Program::from_indices([5, 8]));
    }

    #[test]
    fn crossover_children_have_no_dead_code() {
        let reg = Registry::deepcoder();
        let mut rng = SeededRng::seed_from_u64(21);
        let genes: Vec<Program> = (0..50).map(|_| random_program(4, &mut rng, &reg).unwrap()).collect();
        let scored = ScoredPopulation { scores: vec![1.0; genes.len()], genes };
        for _ in 0..1000 {
            let child = crossover_child(&scored, &mut rng, &reg);
            assert_eq!(effective_length(&child, &reg), 4);
        }
    }

    fn spec_for(target: &Program, reg: &Registry) -> Spec {
        Spec::from_program(target, vec![Value::List(vec![3, -1, 4, 1, -5, 9])], reg).unwrap()
    }

    #[test]
    fn two_token_registry_mutation() {
        let reg = Registry::deepcoder().subset(&["SORT", "REVERSE"]).unwrap();
        let spec = Spec::new(vec![Example::new(Value::List(vec![1]), Value::List(vec![1]))]).unwrap();
        let mut rng = SeededRng::seed_from_u64(0);
        let mut evals = 0;
        for start in [0, 1] {
            let g = Program::from_indices([start]);
            let m = mutate(&g, &mut rng, &UniformFitness, None, &spec, &reg, &mut evals).unwrap();
            assert_eq!(m, Program::from_indices([1 - start]));
        }
    }

    #[test]
    fn mutation_changes_at_most_one_position() {
        let reg = Registry::deepcoder();
        let mut rng = SeededRng::seed_from_u64(5);
        let target = random_program(4, &mut rng, &reg).unwrap();
        let spec = spec_for(&target, &reg);
        let model = OracleFitness::new(target, Metric::Cf, reg.len());
        let mut evals = 0;
        for _ in 0..200 {
            let g = random_program(4, &mut rng, &reg).unwrap();
            let m = mutate(&g, &mut rng, &model, None, &spec, &reg, &mut evals).unwrap();
            let diff = g.tokens().iter().zip(m.tokens()).filter(|(a, b)| a != b).count();
            assert!(diff <= 1);
            assert_eq!(effective_length(&m, &reg), 4);
        }
        assert!(evals > 0);
    }

    #[test]
    fn guided_mutation_beats_random_mutation() {
        let reg = Registry::deepcoder();
        let mut rng = SeededRng::seed_from_u64(8);
        let target = random_program(4, &mut rng, &reg).unwrap();
        let spec = spec_for(&target, &reg);
        let model = OracleFitness::new(target.clone(), Metric::Cf, reg.len());
        let (mut guided, mut random) = (0.0, 0.0);
        let mut evals = 0;
        for _ in 0..1000 {
            let g = random_program(4, &mut rng, &reg).unwrap();
            let m = mutate(&g, &mut rng, &model, None, &spec, &reg, &mut evals).unwrap();
            guided += model.score(&spec, &m, &[]).unwrap();
            let r = mutate(&g, &mut rng, &UniformFitness, None, &spec, &reg, &mut evals).unwrap();
            random += model.score(&spec, &r, &[]).unwrap();
        }
        assert!(guided >= random, "guided {guided} vs random {random}");
    }

    #[test]
    fn pmap_guides_replacements() {
        let reg = Registry::deepcoder();
        let mut rng = SeededRng::seed_from_u64(2);
        let mut p = vec![0.0; reg.len()];
        p[30] = 1.0;
        let pm = ProbabilityMap::new(p).unwrap();
        for _ in 0..50 {
            assert_eq!(replacement(TokenId(0), Some(&pm), &mut rng, &reg), TokenId(30));
        }
        // the only mass is on the current token: falls back to uniform over the others
        for _ in 0..50 {
            assert_ne!(replacement(TokenId(30), Some(&pm), &mut rng, &reg), TokenId(30));
        }
    }
}
