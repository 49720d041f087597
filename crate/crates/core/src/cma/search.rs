use std::time::{Duration, Instant};

use rand::SeedableRng;
use rayon::prelude::*;

use super::{program_error, CmaError, CmaState, MappingScheme, RestartPolicy};
use crate::dsl::{eliminate_dead_code, Program, Registry, Spec};
use crate::report::{FoundProgram, StopReason, SynthesisReport};
use crate::SeededRng;

/// Populations at least this large are decoded and scored in parallel.
const PARALLEL_THRESHOLD: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct CmaConfig {
    pub scheme: MappingScheme,
    pub policy: RestartPolicy,
    pub time_budget: Option<Duration>,
    pub max_evaluations: Option<u64>,
    pub seed: u64,
}

impl CmaConfig {
    pub fn new(scheme: MappingScheme, policy: RestartPolicy) -> Self {
        CmaConfig { scheme, policy, time_budget: None, max_evaluations: None, seed: 0 }
    }
}

fn score(xs: &[nalgebra::DVector<f64>], scheme: &MappingScheme, spec: &Spec, registry: &Registry) -> Result<Vec<(Program, f64)>, CmaError> {
    let one = |x: &nalgebra::DVector<f64>| {
        let p = scheme.decode(x.as_slice())?;
        let e = program_error(&p, spec, registry);
        Ok((p, e))
    };
    if xs.len() >= PARALLEL_THRESHOLD {
        xs.par_iter().map(one).collect()
    } else {
        xs.iter().map(one).collect()
    }
}

/// CMA-ES over the scheme's vectors, minimizing the output distance to the
/// spec. Stops at the first zero-error sample or when a budget runs out; at
/// least one budget must be set. A stalled state is restarted per the policy.
pub fn synthesize_cma(spec: &Spec, config: &CmaConfig, registry: &Registry) -> Result<SynthesisReport, CmaError> {
    if config.time_budget.is_none() && config.max_evaluations.is_none() {
        return Err(CmaError::Config("set a time budget or an evaluation cap".into()));
    }
    if config.scheme.registry_len() != registry.len() {
        return Err(CmaError::Config("scheme and registry sizes differ".into()));
    }
    let start = Instant::now();
    let mut rng = SeededRng::seed_from_u64(config.seed);
    let mut evaluations = 0u64;
    let report = |found: Option<Program>, stop, state: Option<&CmaState>, evaluations| SynthesisReport {
        engine: "cma".into(),
        found: found.map(|p| FoundProgram::new(p, registry)),
        stop,
        generations: state.map_or(0, |s| s.generation()),
        evaluations,
        ns_invocations: None,
        restarts: Some(state.map_or(0, |s| s.restarts())),
        seed: config.seed,
        wall_time: start.elapsed(),
    };
    let out_of_time = || config.time_budget.is_some_and(|b| start.elapsed() >= b);
    if out_of_time() {
        return Ok(report(None, StopReason::TimeBudget, None, 0));
    }

    let mut state = CmaState::random(config.scheme.dimension(), &mut rng)?;
    loop {
        if let Some(cap) = config.max_evaluations {
            if evaluations >= cap {
                return Ok(report(None, StopReason::EvaluationCap, Some(&state), evaluations));
            }
        }
        if out_of_time() {
            return Ok(report(None, StopReason::TimeBudget, Some(&state), evaluations));
        }
        let xs = state.ask(&mut rng)?;
        let scored = score(&xs, &config.scheme, spec, registry)?;
        let counted = match config.max_evaluations {
            Some(cap) => scored.len().min((cap - evaluations) as usize),
            None => scored.len(),
        };
        if let Some((p, _)) = scored[..counted].iter().find(|(_, e)| *e == 0.0) {
            let found = eliminate_dead_code(p, registry);
            let evals = evaluations + 1 + scored.iter().position(|(_, e)| *e == 0.0).unwrap() as u64;
            return Ok(report(Some(found), StopReason::Solved, Some(&state), evals));
        }
        evaluations += counted as u64;
        if counted < scored.len() {
            return Ok(report(None, StopReason::EvaluationCap, Some(&state), evaluations));
        }
        let errors: Vec<f64> = scored.iter().map(|(_, e)| *e).collect();
        state.tell(&xs, &errors)?;
        if state.detect_stall().is_some() {
            state.restart(config.policy, &mut rng)?;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cma::SchemeKind;
    use crate::dsl::{random_program, satisfies, Value};
    use rand::Rng;

    fn problem(len: usize, seed: u64, reg: &Registry) -> Spec {
        let mut rng = SeededRng::seed_from_u64(seed);
        let target = random_program(len, &mut rng, reg).unwrap();
        let inputs = (0..5)
            .map(|_| Value::List((0..10).map(|_| rng.random_range(-64..=64)).collect()))
            .collect();
        Spec::from_program(&target, inputs, reg).unwrap()
    }

    #[test]
    fn zero_budget_does_nothing() {
        let reg = Registry::deepcoder();
        let spec = problem(1, 0, &reg);
        let scheme = MappingScheme::new(SchemeKind::Bin, 1, reg.len()).unwrap();
        let mut c = CmaConfig::new(scheme, RestartPolicy::IPOP);
        c.time_budget = Some(Duration::ZERO);
        let r = synthesize_cma(&spec, &c, &reg).unwrap();
        assert!(r.found.is_none());
        assert_eq!(r.evaluations, 0);
        c.time_budget = None;
        c.max_evaluations = Some(0);
        let r = synthesize_cma(&spec, &c, &reg).unwrap();
        assert!(r.found.is_none());
        assert_eq!(r.evaluations, 0);
    }

    #[test]
    fn length_one_with_bins() {
        let reg = Registry::deepcoder();
        let mut solved = 0;
        for seed in 0..50 {
            let spec = problem(1, 500 + seed, &reg);
            let scheme = MappingScheme::new(SchemeKind::Bin, 1, reg.len()).unwrap();
            let mut c = CmaConfig::new(scheme, RestartPolicy::IPOP);
            c.time_budget = Some(Duration::from_secs(10));
            c.seed = seed;
            let r = synthesize_cma(&spec, &c, &reg).unwrap();
            if let Some(f) = &r.found {
                assert!(satisfies(&f.tokens, &spec, &reg).unwrap());
                solved += 1;
            }
        }
        assert!(solved >= 45, "{solved}/50");
    }

    #[test]
    fn evaluation_cap_is_exact() {
        let reg = Registry::deepcoder();
        // no program produces this
        let spec = Spec::new(vec![crate::dsl::Example::new(
            Value::List(vec![1, 2, 3]),
            Value::List(vec![99, 98, 97, 96, 95, 94, 93]),
        )])
        .unwrap();
        let scheme = MappingScheme::new(SchemeKind::DynBin, 3, reg.len()).unwrap();
        let mut c = CmaConfig::new(scheme, RestartPolicy::IPOP);
        c.max_evaluations = Some(1001);
        let r = synthesize_cma(&spec, &c, &reg).unwrap();
        assert!(r.found.is_none());
        assert_eq!(r.evaluations, 1001);
        assert_eq!(r.stop, StopReason::EvaluationCap);
    }

    #[test]
    fn every_scheme_runs_and_reproduces() {
        let reg = Registry::deepcoder();
        let spec = problem(2, 9, &reg);
        for kind in ["single", "multi", "dyn-multi", "bin", "dyn-bin"] {
            let scheme = MappingScheme::new(kind.parse().unwrap(), 2, reg.len()).unwrap();
            let mut c = CmaConfig::new(scheme, "pb+cb".parse().unwrap());
            c.max_evaluations = Some(3000);
            c.seed = 4;
            let a = synthesize_cma(&spec, &c, &reg).unwrap();
            let b = synthesize_cma(&spec, &c, &reg).unwrap();
            assert_eq!(a.to_json(false), b.to_json(false));
            if let Some(f) = &a.found {
                assert!(satisfies(&f.tokens, &spec, &reg).unwrap());
            }
        }
    }
}
