use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;

use synth_core::bench::{
    aggregate, build_model, generate_problems, read_problems, run_benchmark, write_csv, write_problems, BenchOptions,
    BinMode, EngineConfig, FitnessKind,
};
use synth_core::cma::{synthesize_cma, CmaConfig, MappingScheme, RestartPolicy, SchemeKind};
use synth_core::dsl::{evaluate, Program, Registry, Spec, Value};
use synth_core::fitness::{generate_training_data, write_jsonl, FitnessModel, ModelClient, ProbabilityMap, TrainingConfig};
use synth_core::ga::{synthesize_ga, GaConfig, NsMode};
use synth_core::{SeededRng, SynthesisReport};

/// Random programs sampled for the prior map when no model supplies one.
const PRIOR_SAMPLES: usize = 2000;

#[derive(Parser)]
#[command(name = "synth", version, about = "Program synthesis from input-output examples")]
struct Cli {
    /// Token registry file (id, name, arg types, return type; tab separated).
    /// Defaults to the built-in 38-token registry.
    #[arg(long, global = true)]
    registry: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Genetic algorithm with a pluggable fitness model.
    Ga(GaArgs),
    /// CMA-ES over a program mapping scheme.
    Cma(CmaArgs),
    /// Generate benchmark problems or training data.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Run engines over a problem set.
    Bench(BenchArgs),
    /// Run a program on one input and print its trace.
    Eval(EvalArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Examples, one `{"in": ..., "out": ...}` object per line.
    #[arg(long)]
    spec: PathBuf,
    /// Program length searched.
    #[arg(long)]
    length: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Wall-clock budget in seconds.
    #[arg(long, default_value_t = 60.0)]
    budget_s: f64,
    /// Report file; stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Include wall time in the report (makes it differ between runs).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct GaArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = 100)]
    pop: usize,
    #[arg(long, default_value_t = 0.2)]
    elite: f64,
    /// oracle-cf, oracle-lcs, oracle-fp, model or uniform.
    #[arg(long, default_value = "oracle-cf")]
    fitness: FitnessKind,
    /// Neighborhood search: bfs or dfs.
    #[arg(long, default_value = "bfs")]
    ns: NsMode,
    /// Shell command of the external fitness model.
    #[arg(long)]
    model_cmd: Option<String>,
    /// Hidden target program, needed by the oracle fitness kinds.
    #[arg(long)]
    target: Option<String>,
    /// Stop after this many generations.
    #[arg(long)]
    max_gens: Option<u64>,
}

#[derive(Args)]
struct CmaArgs {
    #[command(flatten)]
    run: RunArgs,
    /// single, multi, dyn-multi, bin or dyn-bin.
    #[arg(long, default_value = "bin")]
    scheme: SchemeKind,
    /// Bin widths for the bin schemes: equal, or prop(ortional) to a token prior.
    #[arg(long, default_value = "equal")]
    bin_mode: BinMode,
    /// none, any `+` combination of pb, mb, cb, or ipop.
    #[arg(long, default_value = "ipop")]
    restart: RestartPolicy,
    /// External model supplying the token prior for proportional bins.
    #[arg(long)]
    model_cmd: Option<String>,
    /// Stop after this many program evaluations.
    #[arg(long)]
    max_evals: Option<u64>,
}

#[derive(Subcommand)]
enum GenCommand {
    /// Benchmark problems as JSON lines.
    Problems(GenArgs),
    /// Fitness-model training records as JSON lines.
    Traindata(GenArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    length: usize,
    #[arg(long, default_value_t = 5)]
    examples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Problems file written by `gen problems`.
    #[arg(long)]
    problems: PathBuf,
    /// JSON array of engine configurations.
    #[arg(long)]
    engines: PathBuf,
    #[arg(long, default_value_t = 60.0)]
    budget_s: f64,
    #[arg(long, default_value_t = default_jobs())]
    jobs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Row file (JSON lines).
    #[arg(long)]
    out: PathBuf,
    /// Per-engine summary CSV; stdout when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Record wall times in rows and medians in the summary.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Comma-separated token names.
    #[arg(long)]
    program: String,
    /// Integer or `[a,b,...]`.
    #[arg(long, allow_hyphen_values = true)]
    input: Value,
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn budget(seconds: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(seconds).with_context(|| format!("invalid budget {seconds}"))
}

fn load_spec(path: &Path) -> Result<Spec> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(Spec::read_jsonl(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn emit_report(report: &SynthesisReport, run: &RunArgs) -> Result<()> {
    let text = report.to_json(run.timing);
    match &run.report {
        Some(path) => {
            let mut out = create(path)?;
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
        None => io::stdout().write_all(text.as_bytes())?,
    }
    let outcome = report.found.as_ref().map_or("no program found", |f| f.text.as_str());
    eprintln!(
        "{}: {outcome} ({} evaluations, {:.3} s)",
        report.engine,
        report.evaluations,
        report.wall_time.as_secs_f64()
    );
    Ok(())
}

fn ga(args: GaArgs, registry: &Registry) -> Result<()> {
    let spec = load_spec(&args.run.spec)?;
    let target = args.target.as_deref().map(|t| Program::parse(t, registry)).transpose()?;
    let model = build_model(args.fitness, target.as_ref(), args.model_cmd.as_deref(), registry)?;
    let config = GaConfig {
        population_size: args.pop,
        elite_fraction: args.elite,
        ns_mode: args.ns,
        max_generations: args.max_gens,
        time_budget: Some(budget(args.run.budget_s)?),
        seed: args.run.seed,
        ..GaConfig::new(args.run.length)
    };
    let report = synthesize_ga(&spec, &config, model.as_ref(), registry)?;
    emit_report(&report, &args.run)
}

fn cma(args: CmaArgs, registry: &Registry) -> Result<()> {
    let spec = load_spec(&args.run.spec)?;
    let length = args.run.length;
    let scheme = match args.bin_mode {
        BinMode::Equal => MappingScheme::new(args.scheme, length, registry.len())?,
        BinMode::Prop => {
            let from_model = match &args.model_cmd {
                Some(cmd) => ModelClient::spawn(cmd, registry)?.pmap(&spec)?,
                None => None,
            };
            let pmap = match from_model {
                Some(p) => p,
                None => {
                    let mut rng = SeededRng::seed_from_u64(args.run.seed);
                    ProbabilityMap::empirical(registry, length, PRIOR_SAMPLES, &mut rng)?
                }
            };
            MappingScheme::proportional(args.scheme, length, &pmap)?
        }
    };
    let config = CmaConfig {
        time_budget: Some(budget(args.run.budget_s)?),
        max_evaluations: args.max_evals,
        seed: args.run.seed,
        ..CmaConfig::new(scheme, args.restart)
    };
    let report = synthesize_cma(&spec, &config, registry)?;
    emit_report(&report, &args.run)
}

fn gen(command: GenCommand, registry: &Registry) -> Result<()> {
    match command {
        GenCommand::Problems(a) => {
            let mut rng = SeededRng::seed_from_u64(a.seed);
            let problems = generate_problems(a.n, a.length, a.examples, &mut rng, registry)?;
            write_problems(&problems, create(&a.out)?)?;
        }
        GenCommand::Traindata(a) => {
            let mut rng = SeededRng::seed_from_u64(a.seed);
            let config = TrainingConfig { examples_per_program: a.examples, ..TrainingConfig::new(a.n, a.length) };
            let records = generate_training_data(&config, &mut rng, registry)?;
            let mut out = create(&a.out)?;
            write_jsonl(&records, &mut out)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn bench(args: BenchArgs, registry: &Registry) -> Result<()> {
    let file = File::open(&args.problems).with_context(|| format!("opening {}", args.problems.display()))?;
    let problems = read_problems(BufReader::new(file), registry)?;
    let text = std::fs::read_to_string(&args.engines).with_context(|| format!("reading {}", args.engines.display()))?;
    let engines: Vec<EngineConfig> =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", args.engines.display()))?;
    let options = BenchOptions { budget: budget(args.budget_s)?, jobs: args.jobs.max(1), seed: args.seed, timing: args.timing };

    let mut live = create(&args.out)?;
    let rows = run_benchmark(&problems, &engines, &options, registry, |row| {
        serde_json::to_writer(&mut live, row)?;
        live.write_all(b"\n")?;
        live.flush()?;
        Ok(())
    })?;
    drop(live);
    // rewrite in canonical order so equal seeds give equal files
    let mut out = create(&args.out)?;
    for row in &rows {
        serde_json::to_writer(&mut out, row)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;

    let summary = aggregate(&rows, &problems, registry);
    for (problem, engine) in &summary.unverified {
        eprintln!("warning: {engine} on {problem}: reported program fails its spec");
    }
    for row in rows.iter().filter(|r| r.error.is_some()) {
        eprintln!("warning: {} on {}: {}", row.engine, row.problem, row.error.as_deref().unwrap_or_default());
    }
    match &args.csv {
        Some(path) => write_csv(&summary, create(path)?)?,
        None => write_csv(&summary, io::stdout().lock())?,
    }
    Ok(())
}

fn eval(args: EvalArgs, registry: &Registry) -> Result<()> {
    let program = Program::parse(&args.program, registry)?;
    let (_, trace) = evaluate(&program, &args.input, registry)?;
    let mut out = io::stdout().lock();
    for (&token, value) in program.tokens().iter().zip(&trace) {
        writeln!(out, "{}\t{value}", registry.token(token).name)?;
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let registry = match &cli.registry {
        Some(path) => Registry::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => Registry::deepcoder(),
    };
    match cli.command {
        Command::Ga(a) => ga(a, &registry),
        Command::Cma(a) => cma(a, &registry),
        Command::Gen(c) => gen(c, &registry),
        Command::Bench(a) => bench(a, &registry),
        Command::Eval(a) => eval(a, &registry),
    }
}
