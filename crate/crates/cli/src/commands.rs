use std::fmt;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;

use equipart::bench::{
    run_accuracy_experiment, run_noise_tracking, run_walk_ablation, run_warehouse, warehouse_transactions, write_rows,
    ExperimentKind, ExperimentSpec, WarehouseReport, WarehouseSpec,
};
use equipart::inference::{exact_map, solve, InitStrategy, SolveResult, WalkConfig};
use equipart::rules::{load_constraints, RuleFile};
use equipart::{ConstraintSet, NoiseSupport, ObservationModel, PairCounts, PartitionSpec, Problem, Stream};

use crate::assertions::{check, Assertion};
use crate::manifest::{file_sha256, Manifest};
use crate::{
    BenchArgs, Command, InitArg, InputArgs, ModelArgs, OracleArgs, ProblemArgs, ReplayArgs, SimulateArgs, SolveArgs,
    SupportArg, WarehouseArgs,
};

pub const SEED_ENV: &str = "EQUIPART_SEED";
const DEFAULT_SEED: u64 = 0;

/// Bad flags or inconsistent inputs (exit 2).
#[derive(Debug)]
pub struct UsageError(pub String);

/// A requested check did not hold (exit 5).
#[derive(Debug)]
pub struct CheckFailed(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}
impl std::error::Error for CheckFailed {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn exit_code(err: &anyhow::Error) -> u8 {
    use equipart::Error as E;
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 2;
        }
        if cause.is::<CheckFailed>() {
            return 5;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::InfeasibleConstraints(_) | E::MalformedConstraint(_) | E::DeadEnd { .. } => 3,
                E::InstanceTooLarge { .. } => 4,
                E::Config(_)
                | E::Parse { .. }
                | E::EmptyFile
                | E::UnknownItem(_)
                | E::UnknownSection(_)
                | E::UnsupportedSpec(_) => 2,
                _ => 1,
            };
        }
    }
    1
}

/// Flag, then config, then `EQUIPART_SEED`, then the built-in default.
fn resolve_seed(flag: Option<u64>, config: Option<u64>) -> Result<u64> {
    if let Some(s) = flag.or(config) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| usage(format!("{SEED_ENV}={v} is not an unsigned integer"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

pub fn run(command: Command, argv: &[String]) -> Result<()> {
    match command {
        Command::Simulate(a) => simulate(a, argv),
        Command::Solve(a) => solve_cmd(a, argv),
        Command::Oracle(a) => oracle_cmd(a, argv),
        Command::Bench(a) => bench(a, argv),
        Command::Warehouse(a) => warehouse(a, argv),
        Command::Replay(a) => replay(a),
    }
}

fn prepare_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn finish(mut manifest: Manifest, dir: &Path, started: Instant) -> Result<()> {
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    manifest.write(dir)
}

// ---------------------------------------------------------------- problem

fn build_problem(args: &ProblemArgs) -> Result<Problem> {
    let (file_spec, cons) = match &args.constraints {
        Some(path) => {
            if !path.exists() {
                return Err(usage(format!("constraint file {} not found", path.display())));
            }
            load_constraints(path)?
        }
        None => (None, ConstraintSet::new()),
    };
    let flag_spec = match (&args.capacities, args.objects, args.partitions) {
        (Some(caps), objects, partitions) => {
            let spec = PartitionSpec::new(caps.clone())?;
            if objects.is_some_and(|o| o != spec.objects()) || partitions.is_some_and(|p| p != spec.partitions()) {
                return Err(usage("--capacities disagrees with --objects/--partitions"));
            }
            Some(spec)
        }
        (None, Some(o), Some(p)) => Some(PartitionSpec::equi(o, p)?),
        (None, None, None) => None,
        _ => return Err(usage("--objects and --partitions must be given together")),
    };
    let spec = match (flag_spec, file_spec) {
        (Some(a), Some(b)) if a != b => {
            return Err(usage("partition flags disagree with the constraint file's capacities"));
        }
        (Some(a), _) => a,
        (None, Some(b)) => b,
        (None, None) => return Err(usage("give --objects and --partitions, --capacities, or a constraint file with capacities")),
    };
    Ok(Problem::new(spec, cons)?)
}

fn observation_model(problem: &Problem, args: &ModelArgs) -> Result<ObservationModel> {
    if args.resolution == 0 {
        return Err(usage("--resolution must be positive"));
    }
    let support = match args.noise_support {
        SupportArg::Full => NoiseSupport::Full,
        SupportArg::AboveChance => NoiseSupport::AboveChance,
    };
    Ok(ObservationModel::new(problem.spec()).with_resolution(args.resolution).with_support(support))
}

fn read_counts(objects: usize, input: &InputArgs) -> Result<PairCounts> {
    let (path, is_stream) = match (&input.stream, &input.counts) {
        (Some(p), _) => (p, true),
        (None, Some(p)) => (p, false),
        (None, None) => return Err(usage("give --stream or --counts")),
    };
    let file = File::open(path).map_err(|e| usage(format!("cannot open {}: {e}", path.display())))?;
    Ok(if is_stream { Stream::read_csv(objects, file)?.counts() } else { PairCounts::read_csv(objects, file)? })
}

// --------------------------------------------------------------- simulate

#[derive(Serialize)]
struct TruthFile<'a> {
    assignment: &'a [usize],
    groups: Vec<Vec<usize>>,
    p: f64,
    seed: u64,
}

fn simulate(args: SimulateArgs, argv: &[String]) -> Result<()> {
    let started = Instant::now();
    if !(0.0..=1.0).contains(&args.p) {
        return Err(usage(format!("--p {} outside [0, 1]", args.p)));
    }
    let seed = resolve_seed(args.seed, None)?;
    let problem = build_problem(&args.problem)?;
    let mut env = equipart::Environment::random(&problem, args.p, seed)?;
    let stream = env.stream(args.requests);

    let dir = &args.out_dir;
    prepare_dir(dir)?;
    stream.write_csv(create(&dir.join("stream.csv"))?)?;
    let truth = env.truth();
    write_json(
        &dir.join("truth.json"),
        &TruthFile { assignment: truth.labels(), groups: truth.groups(problem.partitions()), p: args.p, seed },
    )?;

    let mut manifest = Manifest::new("simulate", argv, seed, None);
    manifest.record(dir, "stream.csv")?;
    manifest.record(dir, "truth.json")?;
    finish(manifest, dir, started)?;
    println!(
        "simulated {} requests on {} (p = {}, seed {seed}) -> {}",
        stream.len(),
        problem.spec().label(),
        args.p,
        dir.display()
    );
    Ok(())
}

// ------------------------------------------------------------ solve/oracle

#[derive(Serialize)]
struct ResultFile<'a> {
    assignment: &'a [usize],
    groups: Vec<Vec<usize>>,
    p_hat: f64,
    score: f64,
    solver: &'a str,
}

fn write_result(dir: &Path, problem: &Problem, result: &SolveResult, solver: &str) -> Result<()> {
    write_json(
        &dir.join("result.json"),
        &ResultFile {
            assignment: result.assignment.labels(),
            groups: result.assignment.groups(problem.partitions()),
            p_hat: result.p_hat,
            score: result.score,
            solver,
        },
    )
}

fn print_result(problem: &Problem, result: &SolveResult, started: Instant) {
    let groups: Vec<String> = result
        .assignment
        .groups(problem.partitions())
        .iter()
        .map(|g| format!("{{{}}}", g.iter().map(usize::to_string).collect::<Vec<_>>().join(",")))
        .collect();
    println!(
        "groups {}  p_hat {:.3}  score {:.4}  ({:.3} s)",
        groups.join(" "),
        result.p_hat,
        result.score,
        started.elapsed().as_secs_f64()
    );
}

fn solve_cmd(args: SolveArgs, argv: &[String]) -> Result<()> {
    let started = Instant::now();
    let problem = build_problem(&args.problem)?;
    let om = observation_model(&problem, &args.model)?;
    let counts = read_counts(problem.objects(), &args.input)?;
    let grid = om.grid();
    let seed = resolve_seed(args.seed, None)?;
    let dir = &args.out_dir;

    let (result, solver) = if args.oracle {
        (exact_map(&problem, &om, &counts, &grid, args.oracle_cap)?, "oracle")
    } else {
        let cfg = WalkConfig {
            epsilon: args.epsilon,
            steps: args.steps,
            init_samples: args.samples,
            init: match args.init {
                InitArg::Lw => InitStrategy::LikelihoodWeighted,
                InitArg::Prior => InitStrategy::Prior,
            },
            reestimate_noise: !args.fixed_noise,
            record_trace: args.trace.is_some(),
            seed,
        };
        cfg.validate().map_err(|e| usage(e.to_string()))?;
        (solve(&problem, &om, &counts, &grid, &cfg)?, "walk")
    };

    prepare_dir(dir)?;
    write_result(dir, &problem, &result, solver)?;
    let mut manifest = Manifest::new("solve", argv, seed, None);
    manifest.record(dir, "result.json")?;
    if let Some(trace) = &args.trace {
        // Relative trace paths live in the output directory so replays stay self-contained.
        let path = dir.join(trace);
        result.write_trace_csv(create(&path)?)?;
        if trace.is_relative() {
            manifest.record(dir, &trace.to_string_lossy())?;
        }
    }
    finish(manifest, dir, started)?;
    print_result(&problem, &result, started);
    Ok(())
}

fn oracle_cmd(args: OracleArgs, argv: &[String]) -> Result<()> {
    let started = Instant::now();
    let problem = build_problem(&args.problem)?;
    let om = observation_model(&problem, &args.model)?;
    let counts = read_counts(problem.objects(), &args.input)?;
    let result = exact_map(&problem, &om, &counts, &om.grid(), args.cap)?;
    let dir = &args.out_dir;
    prepare_dir(dir)?;
    write_result(dir, &problem, &result, "oracle")?;
    let mut manifest = Manifest::new("oracle", argv, 0, None);
    manifest.record(dir, "result.json")?;
    finish(manifest, dir, started)?;
    print_result(&problem, &result, started);
    Ok(())
}

// ------------------------------------------------------------------ bench

fn parse_assertions(exprs: &[String]) -> Result<Vec<Assertion>> {
    exprs.iter().map(|e| Assertion::parse(e).map_err(|err| usage(err.to_string()))).collect()
}

/// Prints every check and fails with exit 5 if any does not hold.
fn report_checks(assertions: &[Assertion], lookup: impl Fn(&str) -> Option<f64>) -> Result<()> {
    let outcomes = check(assertions, lookup).map_err(|e| usage(e.to_string()))?;
    let mut failed = Vec::new();
    for (text, value, ok) in outcomes {
        println!("assert {text}: {value:.4} {}", if ok { "ok" } else { "FAILED" });
        if !ok {
            failed.push(text);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CheckFailed(format!("failed assertions: {}", failed.join(", "))).into())
    }
}

/// Splits `name@number`.
fn at_key(key: &str) -> Option<(&str, usize)> {
    let (name, t) = key.split_once('@')?;
    Some((name, t.parse().ok()?))
}

fn load_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))
}

/// Whether the TOML document sets `key` at top level.
fn sets_key(text: &str, key: &str) -> bool {
    text.parse::<toml::Table>().is_ok_and(|t| t.contains_key(key))
}

fn bench(args: BenchArgs, argv: &[String]) -> Result<()> {
    let started = Instant::now();
    let assertions = parse_assertions(&args.asserts)?;
    let text = load_text(&args.config)?;
    let mut spec = ExperimentSpec::from_toml(&text)?;
    let config_seed = sets_key(&text, "seed").then_some(spec.seed);
    spec.seed = resolve_seed(args.seed, config_seed)?;
    if let Some(n) = args.trials {
        spec.trials = n;
    }
    if let Some(p) = args.p {
        spec.p_true = p;
    }
    if let Some(c) = &args.checkpoints {
        spec.checkpoints = c.clone();
    }
    spec.validate()?;
    let dir = &args.out_dir;
    prepare_dir(dir)?;
    let mut manifest = Manifest::new("bench", argv, spec.seed, Some(spec.to_toml()?));
    println!("{} ({:?}, {}, {} trials, seed {})", spec.name, spec.kind, spec.problem_label(), spec.trials, spec.seed);

    match spec.kind {
        ExperimentKind::Accuracy => {
            let curve = run_accuracy_experiment(&spec)?;
            write_rows(create(&dir.join("results.csv"))?, &curve.rows)?;
            manifest.record(dir, "results.csv")?;
            finish(manifest, dir, started)?;
            println!("{:<8} {:>6} {:>8} {:>8}", "solver", "t", "rate", "±ci");
            for r in &curve.rows {
                println!("{:<8} {:>6} {:>8.3} {:>8.3}", r.solver, r.t, r.success_rate, r.ci_half_width);
            }
            report_checks(&assertions, |key| at_key(key).and_then(|(s, t)| curve.rate(s, t)))
        }
        ExperimentKind::NoiseTracking => {
            let tracking = run_noise_tracking(&spec)?;
            write_rows(create(&dir.join("noise_summary.csv"))?, &tracking.summary)?;
            tracking.write_rows_csv(create(&dir.join("noise_posteriors.csv"))?)?;
            manifest.record(dir, "noise_summary.csv")?;
            manifest.record(dir, "noise_posteriors.csv")?;
            finish(manifest, dir, started)?;
            println!("{:>6} {:>10} {:>10} {:>10}", "t", "mean", "mode-hit", "norm-err");
            for s in &tracking.summary {
                println!(
                    "{:>6} {:>10.4} {:>10.3} {:>10.1e}",
                    s.t, s.mean_of_means, s.mode_hit_rate, s.max_normalization_error
                );
            }
            report_checks(&assertions, |key| {
                let (name, t) = at_key(key)?;
                let s = tracking.at(t)?;
                match name {
                    "mode-hit" => Some(s.mode_hit_rate),
                    "mean" => Some(s.mean_of_means),
                    "norm-error" => Some(s.max_normalization_error),
                    _ => None,
                }
            })
        }
        ExperimentKind::WalkAblation => {
            let table = run_walk_ablation(&spec)?;
            write_rows(create(&dir.join("ablation.csv"))?, &table.cells)?;
            manifest.record(dir, "ablation.csv")?;
            finish(manifest, dir, started)?;
            for c in &table.cells {
                let row = if c.init == "lw" { format!("lw{}", c.samples) } else { c.init.clone() };
                println!("{row:<8} {:>6} {:>8.3} {:>8.3}", c.steps, c.success_rate, c.ci_half_width);
            }
            report_checks(&assertions, |key| {
                let (row, steps) = at_key(key)?;
                if row == "random" {
                    table.rate("random", 0, steps)
                } else {
                    table.rate("lw", row.strip_prefix("lw")?.parse().ok()?, steps)
                }
            })
        }
    }
}

// -------------------------------------------------------------- warehouse

fn write_audit(path: &Path, spec: &WarehouseSpec, report: &WarehouseReport) -> Result<()> {
    use std::io::Write;
    let mut out = create(path)?;
    if !spec.with_rules {
        writeln!(out, "rules disabled; nothing audited")?;
        return Ok(out.flush()?);
    }
    let source = spec.constraints.as_deref().unwrap_or("built-in warehouse rules");
    let total: usize = report.repetitions.iter().map(|r| r.rule_violations).sum();
    writeln!(out, "rules: {source}")?;
    writeln!(out, "repetitions audited: {}", report.repetitions.len())?;
    writeln!(out, "violations: {total}")?;
    for r in report.repetitions.iter().filter(|r| r.rule_violations > 0) {
        writeln!(out, "repetition {}: {} violation(s)", r.repetition, r.rule_violations)?;
    }
    Ok(out.flush()?)
}

fn warehouse(args: WarehouseArgs, argv: &[String]) -> Result<()> {
    let started = Instant::now();
    let assertions = parse_assertions(&args.asserts)?;
    let (mut spec, config_seed) = match &args.config {
        Some(path) => {
            let text = load_text(path)?;
            let spec = WarehouseSpec::from_toml(&text)?;
            let seed = sets_key(&text, "seed").then_some(spec.seed);
            (spec, seed)
        }
        None => (WarehouseSpec::default(), None),
    };
    spec.seed = resolve_seed(args.seed, config_seed)?;
    if let Some(p) = &args.transactions {
        spec.transactions = Some(p.to_string_lossy().into_owned());
    }
    if let Some(p) = &args.constraints {
        spec.constraints = Some(p.to_string_lossy().into_owned());
    }
    if let Some(n) = args.repetitions {
        spec.repetitions = n;
    }
    if let Some(n) = args.sections {
        spec.sections = n;
    }
    if args.no_rules {
        spec.with_rules = false;
    }
    spec.validate()?;
    for path in spec.transactions.iter().chain(&spec.constraints) {
        if !Path::new(path).exists() {
            return Err(usage(format!("{path} not found")));
        }
    }

    let ts = warehouse_transactions(&spec)?;
    let rules = spec.constraints.as_ref().map(RuleFile::load).transpose()?;
    let report = run_warehouse(&spec, &ts, rules.as_ref())?;

    let dir = &args.out_dir;
    prepare_dir(dir)?;
    write_rows(create(&dir.join("warehouse_summary.csv"))?, &report.summary)?;
    write_rows(create(&dir.join("warehouse_repetitions.csv"))?, &report.repetitions)?;
    write_audit(&dir.join("constraint_audit.txt"), &spec, &report)?;
    let mut manifest = Manifest::new("warehouse", argv, spec.seed, Some(spec.to_toml()?));
    for name in ["warehouse_summary.csv", "warehouse_repetitions.csv", "constraint_audit.txt"] {
        manifest.record(dir, name)?;
    }
    finish(manifest, dir, started)?;

    let (wins, losses, p) = report.sign_test();
    println!("{} items, {} transactions, {} repetitions", ts.items().len(), ts.len(), spec.repetitions);
    for s in &report.summary {
        println!("{:<14} mean {:>8.3}  std {:>8.3}", s.solver, s.mean, s.std);
    }
    println!("bn-epp cheaper than oma in {wins}, dearer in {losses} (one-sided sign test p = {p:.2e})");
    let violations: usize = report.repetitions.iter().map(|r| r.rule_violations).sum();
    report_checks(&assertions, |key| match key {
        "violations" => Some(violations as f64),
        "sign-test.p" => Some(p),
        _ => {
            let (solver, stat) = key.rsplit_once('.')?;
            let cost = report.cost(solver)?;
            match stat {
                "mean" => Some(cost.mean),
                "std" => Some(cost.std),
                _ => None,
            }
        }
    })
}

// ----------------------------------------------------------------- replay

/// Flags the replay supplies itself, plus checks, which do not affect outputs.
const REPLACED_FLAGS: [&str; 5] = ["--out-dir", "--seed", "--config", "--jobs", "--assert"];

fn strip_flags(argv: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip_next = false;
    for arg in argv {
        if std::mem::take(&mut skip_next) {
            continue;
        }
        if REPLACED_FLAGS.contains(&arg.as_str()) {
            skip_next = true;
        } else if !REPLACED_FLAGS.iter().any(|f| arg.starts_with(&format!("{f}="))) {
            out.push(arg.clone());
        }
    }
    out
}

fn replay(args: ReplayArgs) -> Result<()> {
    let manifest = Manifest::load(&args.manifest).map_err(|e| usage(format!("{e:#}")))?;
    let base = args.manifest.parent().unwrap_or(Path::new("."));
    let dir: PathBuf = args.out_dir.clone().unwrap_or_else(|| base.join("replay"));
    prepare_dir(&dir)?;

    let mut argv = strip_flags(&manifest.argv);
    // The subcommand may follow global flags; it is the first bare word.
    if !argv.first().is_some_and(|a| a == &manifest.command) {
        argv.retain(|a| a != &manifest.command);
        argv.insert(0, manifest.command.clone());
    }
    if manifest.command != "oracle" {
        argv.extend(["--seed".into(), manifest.seed.to_string()]);
    }
    if let Some(config) = &manifest.config {
        let path = dir.join(".replay-config.toml");
        std::fs::write(&path, config)?;
        argv.extend(["--config".into(), path.to_string_lossy().into_owned()]);
    }
    argv.extend(["--out-dir".into(), dir.to_string_lossy().into_owned()]);

    let cli = <crate::Cli as clap::Parser>::try_parse_from(std::iter::once("equipart".to_string()).chain(argv.clone()))
        .map_err(|e| usage(format!("manifest command line no longer parses: {e}")))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(usage("a manifest cannot replay another replay"));
    }
    println!("replaying `{}` into {}", argv.join(" "), dir.display());
    run(cli.command, &argv)?;

    if args.verify {
        let mut mismatched = Vec::new();
        for (name, expected) in &manifest.outputs {
            let actual = file_sha256(&dir.join(name))?;
            if &actual != expected {
                mismatched.push(name.clone());
            }
        }
        if !mismatched.is_empty() {
            return Err(CheckFailed(format!("replayed outputs differ: {}", mismatched.join(", "))).into());
        }
        println!("replay verified: {} file(s) byte-identical", manifest.outputs.len());
    }
    Ok(())
}
