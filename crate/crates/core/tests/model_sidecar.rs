//! The external-model client against a real child process.

use std::time::Duration;

use rand::SeedableRng;
use synth_core::bench::{generate_problems, run_engine, BinMode, EngineConfig, FitnessKind};
use synth_core::dsl::{random_program, satisfies, traces, Program, Registry};
use synth_core::fitness::{fitness_cf, FitnessModel, ModelClient, ModelError};
use synth_core::ga::NsMode;
use synth_core::SeededRng;

fn stub_command(target: &Program, registry_hash: u64, registry: &Registry) -> String {
    let ids: Vec<String> = target.tokens().iter().map(|t| t.index().to_string()).collect();
    format!(
        "python3 {}/tests/fixtures/stub_model.py {} {registry_hash:016x} {}",
        env!("CARGO_MANIFEST_DIR"),
        ids.join(","),
        registry.len()
    )
}

#[test]
fn ids_and_scores_survive_a_thousand_requests() {
    let reg = Registry::deepcoder();
    let mut rng = SeededRng::seed_from_u64(1);
    let problem = generate_problems(1, 4, 5, &mut rng, &reg).unwrap().remove(0);
    let client = ModelClient::spawn(&stub_command(&problem.target, reg.hash(), &reg), &reg).unwrap();
    for _ in 0..1000 {
        let cand = random_program(4, &mut rng, &reg).unwrap();
        let t = traces(&cand, &problem.spec, &reg).unwrap();
        let got = client.score(&problem.spec, &cand, &t).unwrap();
        assert_eq!(got, fitness_cf(&cand, &problem.target) as f64);
    }
    let pmap = client.pmap(&problem.spec).unwrap().unwrap();
    assert_eq!(pmap.len(), reg.len());
    for t in problem.target.tokens() {
        assert_eq!(pmap.get(*t), 0.9);
    }
}

#[test]
fn registry_mismatch_is_a_remote_error() {
    let reg = Registry::deepcoder();
    let problem = generate_problems(1, 2, 3, &mut SeededRng::seed_from_u64(2), &reg).unwrap().remove(0);
    let client = ModelClient::spawn(&stub_command(&problem.target, reg.hash() ^ 1, &reg), &reg).unwrap();
    let err = client.score(&problem.spec, &problem.target, &[]).unwrap_err();
    assert!(matches!(err, ModelError::Remote(_)), "{err}");
}

#[test]
fn engines_run_on_the_external_model() {
    let reg = Registry::deepcoder();
    let problems = generate_problems(3, 2, 5, &mut SeededRng::seed_from_u64(3), &reg).unwrap();
    for p in &problems {
        let cmd = stub_command(&p.target, reg.hash(), &reg);
        let client = ModelClient::spawn(&cmd, &reg).unwrap();
        let ga = EngineConfig::Ga {
            name: None,
            fitness: FitnessKind::Model,
            pop: 50,
            elite: 0.2,
            ns: NsMode::Dfs,
            model_cmd: Some(cmd.clone()),
            max_generations: Some(200),
        };
        let cma = EngineConfig::Cma {
            name: None,
            scheme: "bin".into(),
            bin_mode: BinMode::Prop,
            restart: "ipop".into(),
            model_cmd: Some(cmd),
            max_evaluations: Some(100_000),
        };
        for engine in [ga, cma] {
            let report = run_engine(&engine, p, Some(Duration::from_secs(60)), 5, &reg, Some(&client)).unwrap();
            let found = report.found.unwrap_or_else(|| panic!("{} missed {}", engine.id(), p.id));
            assert!(satisfies(&found.tokens, &p.spec, &reg).unwrap());
        }
    }
}
