use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::{BenchError, Problem};
use crate::cma::{synthesize_cma, CmaConfig, MappingScheme, RestartPolicy, SchemeKind};
use crate::dsl::{Program, Registry};
use crate::fitness::{FitnessModel, LcsMode, Metric, ModelClient, OracleFitness, ProbabilityMap, UniformFitness};
use crate::ga::{synthesize_ga, GaConfig, NsMode};
use crate::report::{FoundProgram, StopReason, SynthesisReport};
use crate::SeededRng;

/// Random programs sampled for the prior map of proportional bins.
const EMPIRICAL_SAMPLES: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitnessKind {
    #[default]
    OracleCf,
    OracleLcs,
    OracleFp,
    Model,
    Uniform,
}

impl FromStr for FitnessKind {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "oracle-cf" => FitnessKind::OracleCf,
            "oracle-lcs" => FitnessKind::OracleLcs,
            "oracle-fp" => FitnessKind::OracleFp,
            "model" => FitnessKind::Model,
            "uniform" => FitnessKind::Uniform,
            other => return Err(BenchError::Invalid(format!("unknown fitness `{other}`"))),
        })
    }
}

impl fmt::Display for FitnessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitnessKind::OracleCf => "oracle-cf",
            FitnessKind::OracleLcs => "oracle-lcs",
            FitnessKind::OracleFp => "oracle-fp",
            FitnessKind::Model => "model",
            FitnessKind::Uniform => "uniform",
        })
    }
}

/// Fitness model for `kind`. Oracle kinds need the target, `model` the
/// command of the external model.
pub fn build_model(
    kind: FitnessKind,
    target: Option<&Program>,
    model_cmd: Option<&str>,
    registry: &Registry,
) -> Result<Box<dyn FitnessModel>, BenchError> {
    let oracle = |metric| -> Result<Box<dyn FitnessModel>, BenchError> {
        let target = target.ok_or_else(|| BenchError::Invalid(format!("fitness `{kind}` needs the target program")))?;
        Ok(Box::new(OracleFitness::new(target.clone(), metric, registry.len())))
    };
    match kind {
        FitnessKind::OracleCf => oracle(Metric::Cf),
        FitnessKind::OracleLcs => oracle(Metric::Lcs(LcsMode::default())),
        FitnessKind::OracleFp => oracle(Metric::Fp),
        FitnessKind::Uniform => Ok(Box::new(UniformFitness)),
        FitnessKind::Model => {
            let cmd = model_cmd.ok_or_else(|| BenchError::Invalid("fitness `model` needs a model command".into()))?;
            Ok(Box::new(ModelClient::spawn(cmd, registry)?))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinMode {
    #[default]
    Equal,
    Prop,
}

impl FromStr for BinMode {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "equal" => Ok(BinMode::Equal),
            "prop" => Ok(BinMode::Prop),
            other => Err(BenchError::Invalid(format!("unknown bin mode `{other}`"))),
        }
    }
}

impl fmt::Display for BinMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BinMode::Equal => "equal",
            BinMode::Prop => "prop",
        })
    }
}

fn default_pop() -> usize {
    100
}

fn default_elite() -> f64 {
    0.2
}

fn default_scheme() -> String {
    "bin".into()
}

fn default_restart() -> String {
    "ipop".into()
}

/// One entry of the engine configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "engine", rename_all = "kebab-case", rename_all_fields = "kebab-case", deny_unknown_fields)]
pub enum EngineConfig {
    Ga {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        #[serde(default)]
        fitness: FitnessKind,
        #[serde(default = "default_pop")]
        pop: usize,
        #[serde(default = "default_elite")]
        elite: f64,
        #[serde(default)]
        ns: NsMode,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        model_cmd: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_generations: Option<u64>,
    },
    Cma {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        #[serde(default = "default_scheme")]
        scheme: String,
        #[serde(default)]
        bin_mode: BinMode,
        #[serde(default = "default_restart")]
        restart: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        model_cmd: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_evaluations: Option<u64>,
    },
    /// Hands back the hidden target; checks the harness itself.
    Planted {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
    },
}

impl EngineConfig {
    /// Configured name, or one derived from the parameters.
    pub fn id(&self) -> String {
        match self {
            EngineConfig::Ga { name: Some(n), .. }
            | EngineConfig::Cma { name: Some(n), .. }
            | EngineConfig::Planted { name: Some(n) } => n.clone(),
            EngineConfig::Ga { fitness, .. } => format!("ga-{fitness}"),
            EngineConfig::Cma { scheme, bin_mode, restart, .. } => format!("cma-{scheme}-{bin_mode}-{restart}"),
            EngineConfig::Planted { name: None } => "planted".into(),
        }
    }

    /// Parses the scheme and restart strings and checks numeric ranges.
    pub fn validate(&self) -> Result<(), BenchError> {
        match self {
            EngineConfig::Ga { fitness, model_cmd, pop, elite, .. } => {
                if *fitness == FitnessKind::Model && model_cmd.is_none() {
                    return Err(BenchError::Invalid(format!("{}: fitness `model` needs `model-cmd`", self.id())));
                }
                let mut c = GaConfig::new(1);
                c.population_size = *pop;
                c.elite_fraction = *elite;
                c.validate()?;
            }
            EngineConfig::Cma { scheme, restart, .. } => {
                scheme.parse::<SchemeKind>()?;
                restart.parse::<RestartPolicy>()?;
            }
            EngineConfig::Planted { .. } => {}
        }
        Ok(())
    }

    /// External model command this engine talks to, if any.
    pub fn model_cmd(&self) -> Option<&str> {
        match self {
            EngineConfig::Ga { fitness: FitnessKind::Model, model_cmd, .. } => model_cmd.as_deref(),
            EngineConfig::Cma { bin_mode: BinMode::Prop, model_cmd, .. } => model_cmd.as_deref(),
            _ => None,
        }
    }
}

/// Runs one engine on one problem. `shared` is the engine's external model
/// when it uses one.
pub fn run_engine(
    config: &EngineConfig,
    problem: &Problem,
    budget: Option<Duration>,
    seed: u64,
    registry: &Registry,
    shared: Option<&dyn FitnessModel>,
) -> Result<SynthesisReport, BenchError> {
    match config {
        EngineConfig::Ga { fitness, pop, elite, ns, max_generations, .. } => {
            let owned;
            let model: &dyn FitnessModel = match (fitness, shared) {
                (FitnessKind::Model, Some(m)) => m,
                _ => {
                    owned = build_model(*fitness, Some(&problem.target), None, registry)?;
                    owned.as_ref()
                }
            };
            let ga = GaConfig {
                population_size: *pop,
                elite_fraction: *elite,
                ns_mode: *ns,
                max_generations: *max_generations,
                time_budget: budget,
                seed,
                ..GaConfig::new(problem.length)
            };
            Ok(synthesize_ga(&problem.spec, &ga, model, registry)?)
        }
        EngineConfig::Cma { scheme, bin_mode, restart, max_evaluations, .. } => {
            let kind: SchemeKind = scheme.parse()?;
            let mapping = match bin_mode {
                BinMode::Equal => MappingScheme::new(kind, problem.length, registry.len())?,
                BinMode::Prop => {
                    let pmap = match shared {
                        Some(m) => m.pmap(&problem.spec)?,
                        None => None,
                    };
                    let pmap = match pmap {
                        Some(p) => p,
                        None => {
                            let mut rng = SeededRng::seed_from_u64(seed);
                            ProbabilityMap::empirical(registry, problem.length, EMPIRICAL_SAMPLES, &mut rng)?
                        }
                    };
                    MappingScheme::proportional(kind, problem.length, &pmap)?
                }
            };
            let cma = CmaConfig {
                time_budget: budget,
                max_evaluations: *max_evaluations,
                seed,
                ..CmaConfig::new(mapping, restart.parse()?)
            };
            Ok(synthesize_cma(&problem.spec, &cma, registry)?)
        }
        EngineConfig::Planted { .. } => {
            let start = Instant::now();
            let zero = budget == Some(Duration::ZERO);
            Ok(SynthesisReport {
                engine: "planted".into(),
                found: (!zero).then(|| FoundProgram::new(problem.target.clone(), registry)),
                stop: if zero { StopReason::TimeBudget } else { StopReason::Solved },
                generations: 0,
                evaluations: 0,
                ns_invocations: None,
                restarts: None,
                seed,
                wall_time: start.elapsed(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_entries() {
        let text = r#"[
            {"engine": "ga", "fitness": "oracle-lcs", "pop": 50},
            {"engine": "cma", "scheme": "dyn-bin", "bin-mode": "prop", "restart": "pb+cb"},
            {"engine": "planted", "name": "sanity"}
        ]"#;
        let configs: Vec<EngineConfig> = serde_json::from_str(text).unwrap();
        let ids: Vec<String> = configs.iter().map(EngineConfig::id).collect();
        assert_eq!(ids, ["ga-oracle-lcs", "cma-dyn-bin-prop-pb+cb", "sanity"]);
        for c in &configs {
            c.validate().unwrap();
        }
        assert!(serde_json::from_str::<Vec<EngineConfig>>(r#"[{"engine": "ga", "bogus": 1}]"#).is_err());
        let bad: EngineConfig = serde_json::from_str(r#"{"engine": "cma", "scheme": "spiral"}"#).unwrap();
        assert!(bad.validate().is_err());
        let bad: EngineConfig = serde_json::from_str(r#"{"engine": "ga", "fitness": "model"}"#).unwrap();
        assert!(bad.validate().is_err());
    }

    #[test]
    fn fitness_names_round_trip() {
        for name in ["oracle-cf", "oracle-lcs", "oracle-fp", "model", "uniform"] {
            assert_eq!(name.parse::<FitnessKind>().unwrap().to_string(), name);
        }
    }
}
