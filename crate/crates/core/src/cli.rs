//! `lhs-attack` command line.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime failure.

use std::ffi::OsString;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use crate::attack::{run_attack, AttackConfig, AttackMode, Status};
use crate::harness::{emit_trace_csv, read_points, run_experiment, write_points, ExperimentConfig};
use crate::oracle::{decide, serve, OracleKind, OracleSpec, Phase, QueryLedger};
use crate::rng::SeedStream;
use crate::sampler::{batch_discrepancy, draw, mean_abs_coordinate_mean, normalize_rows, SamplerKind};

#[derive(Debug, Parser)]
#[command(name = "lhs-attack", version, about = "Decision-based boundary attack with Latin Hypercube gradient estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a single attack and write its trace.
    Attack(AttackArgs),
    /// Run an experiment described by a config file.
    Bench { config: PathBuf },
    /// Draw a noise batch and print it with diagnostics.
    Sample(SampleArgs),
    /// Answer line-protocol queries on stdin/stdout with a built-in oracle.
    OracleServe {
        oracle: String,
        #[command(flatten)]
        point: PointArgs,
    },
}

#[derive(Debug, Args)]
struct PointArgs {
    /// Original point as space-separated floats.
    #[arg(long, conflicts_with = "points")]
    point: Option<String>,
    /// Points file to take the original from.
    #[arg(long)]
    points: Option<PathBuf>,
    /// Line index into --points.
    #[arg(long, default_value_t = 0, requires = "points")]
    index: usize,
}

#[derive(Debug, Args)]
struct AttackArgs {
    #[arg(long)]
    oracle: String,
    #[command(flatten)]
    point: PointArgs,
    #[arg(long, default_value = "lhs")]
    sampler: SamplerKind,
    /// Query budget.
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    iterations: usize,
    #[arg(long, default_value_t = 100)]
    m0: usize,
    #[arg(long)]
    theta: Option<f64>,
    /// Start image for a targeted attack (space-separated floats).
    #[arg(long)]
    target_start: Option<String>,
    /// External oracle reply timeout in seconds.
    #[arg(long)]
    oracle_timeout: Option<f64>,
    /// Trace CSV destination.
    #[arg(long, default_value = "trace.csv")]
    out: PathBuf,
    /// Also write the adversarial example as a points file.
    #[arg(long)]
    adversarial_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value = "lhs")]
    sampler: SamplerKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Scale every row to unit length.
    #[arg(long)]
    normalize: bool,
    /// Write the rows here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => m,
        }
    }
}

fn config_err(e: impl ToString) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime_err(e: impl ToString) -> CliError {
    CliError::Runtime(e.to_string())
}

fn parse_inline(text: &str) -> Result<Vec<f64>, CliError> {
    crate::oracle::parse_request(text, None).map_err(config_err)
}

fn resolve_original(spec: &OracleSpec, args: &PointArgs) -> Result<Vec<f64>, CliError> {
    let point = if let Some(text) = &args.point {
        parse_inline(text)?
    } else if let Some(path) = &args.points {
        let points = read_points(path).map_err(config_err)?;
        points
            .get(args.index)
            .cloned()
            .ok_or_else(|| config_err(format!("{} has no point at index {}", path.display(), args.index)))?
    } else {
        spec.default_original()
            .ok_or_else(|| config_err(format!("oracle `{spec}` needs an explicit --point or --points")))?
    };
    if let Some(d) = spec.dim() {
        if d != point.len() {
            return Err(config_err(format!("original has dimension {}, oracle expects {d}", point.len())));
        }
    }
    Ok(point)
}

fn attack(args: AttackArgs) -> Result<(), CliError> {
    let mut spec = OracleSpec::parse(&args.oracle).map_err(config_err)?;
    if let Some(t) = args.oracle_timeout {
        if !(t > 0.0 && t.is_finite()) {
            return Err(config_err("--oracle-timeout must be positive"));
        }
        spec = spec.with_timeout(Duration::from_secs_f64(t));
    }
    let original = resolve_original(&spec, &args.point)?;
    let init_target = args.target_start.as_deref().map(parse_inline).transpose()?;
    let config = AttackConfig {
        initial_samples: args.m0,
        iterations: args.iterations,
        theta: args.theta,
        max_queries: args.budget,
        sampler: args.sampler,
        mode: if init_target.is_some() { AttackMode::Targeted } else { AttackMode::Untargeted },
        seed: args.seed,
        init_target,
        ..AttackConfig::default()
    };
    config.validate().map_err(config_err)?;

    let oracle = spec.build(&original).map_err(runtime_err)?;
    // The original's label is checked outside the attack's ledger.
    let mut setup = QueryLedger::new();
    if decide(&oracle, &original, &mut setup, Phase::Init).map_err(runtime_err)?.is_adversarial() {
        return Err(runtime_err("the original point is already adversarial"));
    }
    let outcome = run_attack(&oracle, &original, &config).map_err(config_err)?;
    let trace = &outcome.trace;
    emit_trace_csv(trace, &args.out).map_err(runtime_err)?;
    if let (Some(path), Some(x)) = (&args.adversarial_out, &outcome.adversarial) {
        write_points(std::slice::from_ref(x), path).map_err(runtime_err)?;
    }
    let distortion = outcome
        .adversarial
        .as_ref()
        .map(|x| crate::attack::distance(x, &original));
    println!(
        "status={} queries={} distortion={}",
        trace.status,
        trace.ledger.total(),
        distortion.map_or_else(|| "none".to_owned(), |d| format!("{d:.16e}"))
    );
    match trace.status {
        Status::Completed | Status::BudgetExhausted => Ok(()),
        other => Err(runtime_err(format!(
            "attack ended with {other}: {}",
            trace.failure.as_deref().unwrap_or("no details")
        ))),
    }
}

fn bench(path: PathBuf) -> Result<(), CliError> {
    let config = ExperimentConfig::load(&path).map_err(config_err)?;
    let report = run_experiment(&config).map_err(|e| if e.is_config() { config_err(e) } else { runtime_err(e) })?;
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let _ = write!(out, "{}", crate::harness::summary_to_csv(&report.summary));
    Ok(())
}

fn sample(args: SampleArgs) -> Result<(), CliError> {
    let batch = draw(args.sampler, args.count, args.dim, SeedStream::new(args.seed)).map_err(config_err)?;
    let discrepancy = batch_discrepancy(&batch).ok();
    let mean_abs = mean_abs_coordinate_mean(&batch);
    let batch = if args.normalize {
        normalize_rows(batch).map_err(runtime_err)?
    } else {
        batch
    };
    let mut text = String::new();
    text.push_str(&format!(
        "# sampler={} count={} dim={} seed={}\n# ks_discrepancy={} mean_abs_coordinate_mean={:.16e}\n",
        args.sampler,
        args.count,
        args.dim,
        args.seed,
        discrepancy.map_or_else(|| "n/a".to_owned(), |d| format!("{d:.16e}")),
        mean_abs
    ));
    for i in 0..batch.count() {
        text.push_str(&crate::oracle::format_request(batch.row(i)));
        if let Some(strata) = (0..batch.dim()).map(|j| batch.stratum(i, j)).collect::<Option<Vec<_>>>() {
            let s: Vec<String> = strata.iter().map(u32::to_string).collect();
            text.push_str(" # strata ");
            text.push_str(&s.join(" "));
        }
        text.push('\n');
    }
    match args.out {
        Some(path) => std::fs::write(path, text).map_err(runtime_err),
        None => {
            let _ = io::stdout().write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn oracle_serve(text: &str, point: &PointArgs) -> Result<(), CliError> {
    let spec = OracleSpec::parse(text).map_err(config_err)?;
    let original = match (&spec.kind, &point.point, &point.points) {
        // A halfspace does not depend on the original.
        (OracleKind::Halfspace { normal, .. }, None, None) => vec![0.0; normal.len()],
        _ => resolve_original(&spec, point)?,
    };
    let oracle = spec.build(&original).map_err(runtime_err)?;
    let stdin = io::stdin();
    let stdout = io::stdout();
    serve(&oracle, stdin.lock(), stdout.lock()).map_err(runtime_err)?;
    Ok(())
}

/// Parses `argv` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Attack(args) => attack(args),
        Command::Bench { config } => bench(config),
        Command::Sample(args) => sample(args),
        Command::OracleServe { oracle, point } => oracle_serve(&oracle, &point),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}
