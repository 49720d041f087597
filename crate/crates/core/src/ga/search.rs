use std::time::{Duration, Instant};

use rand::SeedableRng;
use rayon::prelude::*;

use super::neighborhood::neighborhood_search;
use super::operators::{crossover_child, mutate, select_parent};
use super::{ns_trigger, FitnessHistory, GaConfig, GaError, ScoredPopulation};
use crate::dsl::{eliminate_dead_code, random_program, run, Program, Registry, Spec, Trace};
use crate::fitness::{FitnessModel, ModelError, ProbabilityMap};
use crate::report::{FoundProgram, StopReason, SynthesisReport};
use crate::SeededRng;

/// `T` random programs of effective length `L`.
pub fn init_population(config: &GaConfig, rng: &mut SeededRng, registry: &Registry) -> Result<Vec<Program>, GaError> {
    config.validate()?;
    (0..config.population_size)
        .map(|_| random_program(config.program_length, rng, registry).map_err(GaError::from))
        .collect()
}

fn population_traces(genes: &[Program], spec: &Spec, registry: &Registry) -> Vec<Vec<Trace>> {
    genes
        .par_iter()
        .map(|g| spec.inputs().map(|i| run(g, i, registry)).collect())
        .collect()
}

fn solves(traces: &[Trace], spec: &Spec) -> bool {
    traces
        .iter()
        .zip(spec.examples())
        .all(|(t, e)| t.last() == Some(&e.output))
}

fn sort_scored(genes: Vec<Program>, scores: Vec<f64>) -> Result<ScoredPopulation, GaError> {
    if scores.len() != genes.len() || scores.iter().any(|s| !s.is_finite()) {
        return Err(ModelError::Protocol("model returned a bad score vector".into()).into());
    }
    let mut order: Vec<usize> = (0..genes.len()).collect();
    // stable: equal scores keep insertion order
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    Ok(ScoredPopulation {
        genes: order.iter().map(|&i| genes[i].clone()).collect(),
        scores: order.iter().map(|&i| scores[i]).collect(),
    })
}

/// Scores every gene and sorts best first. Equal scores keep their order.
pub fn rank(genes: Vec<Program>, spec: &Spec, model: &dyn FitnessModel, registry: &Registry) -> Result<ScoredPopulation, GaError> {
    for g in &genes {
        g.validate(registry)?;
    }
    let traces = population_traces(&genes, spec, registry);
    let scores = model.score_batch(spec, &genes, &traces)?;
    sort_scored(genes, scores)
}

/// Generation-by-generation driver behind [`synthesize_ga`].
pub struct GaRun<'a> {
    config: GaConfig,
    spec: &'a Spec,
    model: &'a dyn FitnessModel,
    registry: &'a Registry,
    pmap: Option<ProbabilityMap>,
    rng: SeededRng,
    population: Vec<Program>,
    ranked: Option<ScoredPopulation>,
    history: FitnessHistory,
    generations: u64,
    evaluations: u64,
    ns_invocations: u64,
}

impl<'a> GaRun<'a> {
    pub fn new(spec: &'a Spec, config: &GaConfig, model: &'a dyn FitnessModel, registry: &'a Registry) -> Result<Self, GaError> {
        let mut rng = SeededRng::seed_from_u64(config.seed);
        let population = init_population(config, &mut rng, registry)?;
        Self::with_population(spec, config, model, registry, population, rng)
    }

    /// Starts from a given first generation instead of a random one.
    pub fn with_population(
        spec: &'a Spec,
        config: &GaConfig,
        model: &'a dyn FitnessModel,
        registry: &'a Registry,
        population: Vec<Program>,
        rng: SeededRng,
    ) -> Result<Self, GaError> {
        config.validate()?;
        if population.len() != config.population_size {
            return Err(GaError::Config("population does not match the configured size".into()));
        }
        for g in &population {
            g.validate(registry)?;
        }
        let pmap = model.pmap(spec)?;
        Ok(GaRun {
            config: config.clone(),
            spec,
            model,
            registry,
            pmap,
            rng,
            population,
            ranked: None,
            history: FitnessHistory::new(),
            generations: 0,
            evaluations: 0,
            ns_invocations: 0,
        })
    }

    /// Genes of the current generation, in breeding order.
    pub fn population(&self) -> &[Program] {
        &self.population
    }

    /// The previous generation after ranking.
    pub fn last_ranked(&self) -> Option<&ScoredPopulation> {
        self.ranked.as_ref()
    }

    pub fn history(&self) -> &FitnessHistory {
        &self.history
    }

    /// Index of the current generation.
    pub fn generation(&self) -> u64 {
        self.generations
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn ns_invocations(&self) -> u64 {
        self.ns_invocations
    }

    /// Checks the current generation against the examples, then ranks it, runs
    /// the neighborhood search if fitness has saturated, and breeds the next
    /// generation. Returns the solution, already dead-code free, if one turned up.
    pub fn step(&mut self) -> Result<Option<Program>, GaError> {
        let traces = population_traces(&self.population, self.spec, self.registry);
        self.evaluations += self.population.len() as u64;
        if let Some(i) = traces.iter().position(|t| solves(t, self.spec)) {
            return Ok(Some(eliminate_dead_code(&self.population[i], self.registry)));
        }

        let scores = self.model.score_batch(self.spec, &self.population, &traces)?;
        let scored = sort_scored(std::mem::take(&mut self.population), scores)?;
        self.history.push(scored.mean_score());

        if ns_trigger(&self.history, self.config.window) {
            self.ns_invocations += 1;
            self.history.clear();
            let top = &scored.genes[..self.config.top_n.min(scored.len())];
            let hit = neighborhood_search(
                top,
                self.spec,
                self.config.ns_mode,
                self.model,
                self.registry,
                &mut self.evaluations,
            )?;
            if let Some(p) = hit {
                self.ranked = Some(scored);
                return Ok(Some(eliminate_dead_code(&p, self.registry)));
            }
        }

        self.population = self.breed(&scored)?;
        self.ranked = Some(scored);
        self.generations += 1;
        Ok(None)
    }

    fn breed(&mut self, scored: &ScoredPopulation) -> Result<Vec<Program>, GaError> {
        let size = self.config.population_size;
        let elites = self.config.elite_count();
        let crossovers = ((size - elites) as f64 * self.config.crossover_share).round() as usize;
        let mut next: Vec<Program> = scored.genes[..elites].to_vec();
        for _ in 0..crossovers {
            next.push(crossover_child(scored, &mut self.rng, self.registry));
        }
        while next.len() < size {
            let parent = &scored.genes[select_parent(scored, &mut self.rng)];
            let child = mutate(
                parent,
                &mut self.rng,
                self.model,
                self.pmap.as_ref(),
                self.spec,
                self.registry,
                &mut self.evaluations,
            )?;
            next.push(child);
        }
        Ok(next)
    }
}

/// Runs the genetic search until a program satisfies every example or a budget runs out.
/// At least one of the generation cap and the time budget must be set.
pub fn synthesize_ga(
    spec: &Spec,
    config: &GaConfig,
    model: &dyn FitnessModel,
    registry: &Registry,
) -> Result<SynthesisReport, GaError> {
    config.validate()?;
    if config.max_generations.is_none() && config.time_budget.is_none() {
        return Err(GaError::Config("set a generation cap or a time budget".into()));
    }
    let start = Instant::now();
    let report = |found: Option<Program>, stop, run: Option<&GaRun>| SynthesisReport {
        engine: "ga".into(),
        found: found.map(|p| FoundProgram::new(p, registry)),
        stop,
        generations: run.map_or(0, |r| r.generation()),
        evaluations: run.map_or(0, |r| r.evaluations()),
        ns_invocations: Some(run.map_or(0, |r| r.ns_invocations())),
        restarts: None,
        seed: config.seed,
        wall_time: start.elapsed(),
    };
    if config.time_budget == Some(Duration::ZERO) || config.max_generations == Some(0) {
        let stop = if config.time_budget == Some(Duration::ZERO) {
            StopReason::TimeBudget
        } else {
            StopReason::GenerationCap
        };
        return Ok(report(None, stop, None));
    }

    let mut run = GaRun::new(spec, config, model, registry)?;
    loop {
        if let Some(p) = run.step()? {
            return Ok(report(Some(p), StopReason::Solved, Some(&run)));
        }
        if config.max_generations.is_some_and(|m| run.generation() >= m) {
            return Ok(report(None, StopReason::GenerationCap, Some(&run)));
        }
        if config.time_budget.is_some_and(|b| start.elapsed() >= b) {
            return Ok(report(None, StopReason::TimeBudget, Some(&run)));
        }
    }
}
