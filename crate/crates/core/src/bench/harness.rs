use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::engine::{run_engine, EngineConfig};
use super::{BenchError, Problem};
use crate::dsl::{fnv1a64, satisfies, Program, Registry};
use crate::fitness::{FitnessModel, ModelClient};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    /// Wall-clock budget of each run.
    pub budget: Duration,
    /// Worker threads.
    pub jobs: usize,
    pub seed: u64,
    /// Record wall time in rows. Off keeps row files reproducible.
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub problem: String,
    pub engine: String,
    pub params: serde_json::Value,
    pub found: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub program: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Program>,
    pub evaluations: u64,
    pub generations: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ns_invocations: Option<u64>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Seed of one (problem, engine) run under a global seed.
pub fn run_seed(problem: &str, engine: &str, global: u64) -> u64 {
    let mut key = Vec::with_capacity(problem.len() + engine.len() + 10);
    key.extend_from_slice(problem.as_bytes());
    key.push(0);
    key.extend_from_slice(engine.as_bytes());
    key.push(0);
    key.extend_from_slice(&global.to_le_bytes());
    fnv1a64(&key)
}

/// Runs every engine on every problem on `jobs` workers. `on_row` sees rows
/// in completion order; the returned rows are in (problem, engine) order.
/// A failing run becomes a not-found row carrying the error.
pub fn run_benchmark<F>(
    problems: &[Problem],
    engines: &[EngineConfig],
    options: &BenchOptions,
    registry: &Registry,
    mut on_row: F,
) -> Result<Vec<BenchRow>, BenchError>
where
    F: FnMut(&BenchRow) -> Result<(), BenchError>,
{
    if problems.is_empty() || engines.is_empty() {
        return Err(BenchError::Invalid("need at least one problem and one engine".into()));
    }
    let ids: Vec<String> = engines.iter().map(EngineConfig::id).collect();
    if ids.iter().collect::<HashSet<_>>().len() != ids.len() {
        return Err(BenchError::Invalid("engine ids must be unique; set `name` to tell them apart".into()));
    }
    for e in engines {
        e.validate()?;
    }
    // one model process per engine, shared by its runs
    let models: Vec<Option<Arc<ModelClient>>> = engines
        .iter()
        .map(|e| e.model_cmd().map(|cmd| ModelClient::spawn(cmd, registry).map(Arc::new)).transpose())
        .collect::<Result<_, _>>()?;

    let tasks: Vec<(usize, usize)> = (0..problems.len())
        .flat_map(|p| (0..engines.len()).map(move |e| (p, e)))
        .collect();
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, BenchRow)>();
    let mut rows: Vec<Option<BenchRow>> = vec![None; tasks.len()];

    std::thread::scope(|scope| -> Result<(), BenchError> {
        for _ in 0..options.jobs.max(1) {
            let tx = tx.clone();
            let (tasks, next, models, ids) = (&tasks, &next, &models, &ids);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(p, e)) = tasks.get(i) else { break };
                let model = models[e].as_deref().map(|m| m as &dyn FitnessModel);
                let row = run_one(&problems[p], &engines[e], &ids[e], options, registry, model);
                if tx.send((i, row)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (i, row) in rx {
            on_row(&row)?;
            rows[i] = Some(row);
        }
        Ok(())
    })?;
    Ok(rows.into_iter().map(|r| r.expect("every task reports")).collect())
}

fn run_one(
    problem: &Problem,
    engine: &EngineConfig,
    engine_id: &str,
    options: &BenchOptions,
    registry: &Registry,
    model: Option<&dyn FitnessModel>,
) -> BenchRow {
    let seed = run_seed(&problem.id, engine_id, options.seed);
    let params = serde_json::to_value(engine).unwrap_or(serde_json::Value::Null);
    let mut row = BenchRow {
        problem: problem.id.clone(),
        engine: engine_id.to_string(),
        params,
        found: false,
        program: None,
        tokens: None,
        evaluations: 0,
        generations: 0,
        restarts: None,
        ns_invocations: None,
        seed,
        wall_time_s: None,
        error: None,
    };
    match run_engine(engine, problem, Some(options.budget), seed, registry, model) {
        Ok(report) => {
            row.found = report.found.is_some();
            row.program = report.found.as_ref().map(|f| f.text.clone());
            row.tokens = report.found.map(|f| f.tokens);
            row.evaluations = report.evaluations;
            row.generations = report.generations;
            row.restarts = report.restarts;
            row.ns_invocations = report.ns_invocations;
            row.wall_time_s = options.timing.then(|| report.wall_time.as_secs_f64());
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineSummary {
    pub engine: String,
    pub runs: usize,
    pub solved: usize,
    pub rate: f64,
    /// Median wall time of solved runs; absent without timing or solutions.
    pub median_s: Option<f64>,
    pub mean_evals: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub engines: Vec<EngineSummary>,
    /// (problem, engine) of found rows whose program fails its spec.
    pub unverified: Vec<(String, String)>,
}

/// Per-engine statistics. Found programs are checked against their
/// problem's spec again; ones that fail do not count as solved.
pub fn aggregate(rows: &[BenchRow], problems: &[Problem], registry: &Registry) -> Aggregate {
    let specs: BTreeMap<&str, &Problem> = problems.iter().map(|p| (p.id.as_str(), p)).collect();
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<&str, Vec<(&BenchRow, bool)>> = BTreeMap::new();
    let mut unverified = Vec::new();
    for row in rows {
        let verified = row.found
            && match (&row.tokens, specs.get(row.problem.as_str())) {
                (Some(p), Some(problem)) => satisfies(p, &problem.spec, registry).unwrap_or(false),
                _ => false,
            };
        if row.found && !verified {
            unverified.push((row.problem.clone(), row.engine.clone()));
        }
        if !groups.contains_key(row.engine.as_str()) {
            order.push(row.engine.clone());
        }
        groups.entry(row.engine.as_str()).or_default().push((row, verified));
    }
    let engines = order
        .iter()
        .map(|engine| {
            let group = &groups[engine.as_str()];
            let solved = group.iter().filter(|(_, ok)| *ok).count();
            let mut times: Vec<f64> = group
                .iter()
                .filter(|(_, ok)| *ok)
                .filter_map(|(r, _)| r.wall_time_s)
                .collect();
            times.sort_by(f64::total_cmp);
            let median_s = match times.len() {
                0 => None,
                n if n % 2 == 1 => Some(times[n / 2]),
                n => Some((times[n / 2 - 1] + times[n / 2]) / 2.0),
            };
            let mean_evals = group.iter().map(|(r, _)| r.evaluations as f64).sum::<f64>() / group.len() as f64;
            EngineSummary {
                engine: engine.clone(),
                runs: group.len(),
                solved,
                rate: solved as f64 / group.len() as f64,
                median_s,
                mean_evals,
            }
        })
        .collect();
    Aggregate { engines, unverified }
}

/// `engine,rate,median_s,mean_evals`, with `NA` for a missing median.
pub fn write_csv<W: Write>(aggregate: &Aggregate, out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| BenchError::Invalid(format!("csv: {e}"));
    w.write_record(["engine", "rate", "median_s", "mean_evals"]).map_err(csv_err)?;
    for s in &aggregate.engines {
        let median = s.median_s.map_or_else(|| "NA".to_string(), |m| format!("{m:.6}"));
        w.write_record([s.engine.clone(), format!("{:.4}", s.rate), median, format!("{:.1}", s.mean_evals)])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{generate_problems, FitnessKind};
    use crate::ga::NsMode;
    use crate::SeededRng;
    use rand::SeedableRng;

    fn engines() -> Vec<EngineConfig> {
        vec![
            EngineConfig::Planted { name: None },
            EngineConfig::Ga {
                name: None,
                fitness: FitnessKind::OracleCf,
                pop: 40,
                elite: 0.2,
                ns: NsMode::Bfs,
                model_cmd: None,
                max_generations: Some(20),
            },
            EngineConfig::Cma {
                name: None,
                scheme: "bin".into(),
                bin_mode: Default::default(),
                restart: "ipop".into(),
                model_cmd: None,
                max_evaluations: Some(2000),
            },
        ]
    }

    fn options(budget: Duration) -> BenchOptions {
        BenchOptions { budget, jobs: 3, seed: 42, timing: false }
    }

    #[test]
    fn zero_budget_finds_nothing() {
        let reg = Registry::deepcoder();
        let problems = generate_problems(4, 2, 3, &mut SeededRng::seed_from_u64(0), &reg).unwrap();
        let rows = run_benchmark(&problems, &engines(), &options(Duration::ZERO), &reg, |_| Ok(())).unwrap();
        assert_eq!(rows.len(), 12);
        assert!(rows.iter().all(|r| !r.found));
    }

    #[test]
    fn planted_engine_always_solves() {
        let reg = Registry::deepcoder();
        let problems = generate_problems(10, 3, 5, &mut SeededRng::seed_from_u64(1), &reg).unwrap();
        let rows = run_benchmark(&problems, &engines()[..1], &options(Duration::from_secs(5)), &reg, |_| Ok(())).unwrap();
        let agg = aggregate(&rows, &problems, &reg);
        assert_eq!(agg.engines[0].rate, 1.0);
        assert!(agg.unverified.is_empty());
    }

    #[test]
    fn same_seed_same_rows() {
        let reg = Registry::deepcoder();
        let problems = generate_problems(4, 2, 4, &mut SeededRng::seed_from_u64(2), &reg).unwrap();
        let mut streamed = 0;
        let a = run_benchmark(&problems, &engines(), &options(Duration::from_secs(30)), &reg, |_| {
            streamed += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(streamed, a.len());
        let mut opts = options(Duration::from_secs(30));
        opts.jobs = 1;
        let b = run_benchmark(&problems, &engines(), &opts, &reg, |_| Ok(())).unwrap();
        assert_eq!(a, b);
        for (i, row) in a.iter().enumerate() {
            assert_eq!(row.problem, problems[i / 3].id);
        }
    }

    #[test]
    fn forged_rows_fail_verification() {
        let reg = Registry::deepcoder();
        let problems = generate_problems(1, 2, 4, &mut SeededRng::seed_from_u64(3), &reg).unwrap();
        let mut rows = run_benchmark(&problems, &engines()[..1], &options(Duration::from_secs(1)), &reg, |_| Ok(())).unwrap();
        let wrong = (0..reg.len())
            .map(|i| Program::from_indices([i]))
            .find(|p| !satisfies(p, &problems[0].spec, &reg).unwrap())
            .unwrap();
        rows[0].tokens = Some(wrong);
        let agg = aggregate(&rows, &problems, &reg);
        assert_eq!(agg.engines[0].solved, 0);
        assert_eq!(agg.unverified.len(), 1);
    }

    #[test]
    fn csv_layout() {
        let agg = Aggregate {
            engines: vec![EngineSummary {
                engine: "ga-oracle-cf".into(),
                runs: 2,
                solved: 1,
                rate: 0.5,
                median_s: None,
                mean_evals: 12.0,
            }],
            unverified: vec![],
        };
        let mut out = Vec::new();
        write_csv(&agg, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "engine,rate,median_s,mean_evals\nga-oracle-cf,0.5000,NA,12.0\n");
    }

    #[test]
    fn seeds_depend_on_all_parts() {
        let s = run_seed("p0001", "ga", 1);
        assert_ne!(s, run_seed("p0002", "ga", 1));
        assert_ne!(s, run_seed("p0001", "cma", 1));
        assert_ne!(s, run_seed("p0001", "ga", 2));
        assert_eq!(s, run_seed("p0001", "ga", 1));
    }
}
