use std::fmt;
use std::fs;

use rand::Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, ModeName, PointSource};
use super::{emit_trace_csv, invalid, read_points, write_summary_csv, HarnessError};
use crate::attack::{run_attack, AttackTrace, Status};
use crate::oracle::{decide, OracleSpec, Phase, QueryLedger};
use crate::rng::{mix, SeedStream};
use crate::sampler::SamplerKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    Mean,
    Median,
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Statistic::Mean => "mean",
            Statistic::Median => "median",
        })
    }
}

/// One cell of the distortion-versus-budget table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub oracle: String,
    pub sampler: SamplerKind,
    pub budget: u64,
    pub statistic: Statistic,
    /// NaN when no run reached the boundary within the budget.
    pub distortion: f64,
    /// Runs that contributed a value.
    pub repetitions: usize,
    /// Runs with no boundary point within the budget.
    pub failures: usize,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub oracle_index: usize,
    pub point_index: usize,
    pub sampler: SamplerKind,
    pub repetition: u32,
    pub seed: u64,
    pub trace: AttackTrace,
}

impl RunRecord {
    pub fn file_name(&self) -> String {
        format!(
            "trace_o{}_p{}_{}_r{}.csv",
            self.oracle_index, self.point_index, self.sampler, self.repetition
        )
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub runs: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentReport {
    pub fn row(&self, oracle: &str, sampler: SamplerKind, budget: u64, statistic: Statistic) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|r| r.oracle == oracle && r.sampler == sampler && r.budget == budget && r.statistic == statistic)
    }
}

/// Seed of one run. The sampler is deliberately left out, so runs that
/// differ only in sampler share their seed and are paired.
pub fn run_seed(base_seed: u64, oracle: usize, point: usize, repetition: u32) -> u64 {
    base_seed ^ mix(0, &[oracle as u64, point as u64, u64::from(repetition)])
}

fn resolve_points(config: &ExperimentConfig, spec: &OracleSpec, oracle_index: usize) -> Result<Vec<Vec<f64>>, HarnessError> {
    let p = &config.points;
    let mut points = match p.source {
        PointSource::Default => vec![spec.default_original().ok_or_else(|| {
            invalid(
                format!("experiment.oracles[{oracle_index}]"),
                "this oracle has no default original; set [points] source",
            )
        })?],
        PointSource::File => read_points(p.path.as_ref().expect("validated"))?,
        PointSource::Random => random_points(config, spec, oracle_index)?,
    };
    if let Some(cap) = p.count {
        points.truncate(cap);
    }
    if points.is_empty() {
        return Err(invalid("points", "no original points"));
    }
    if let Some(d) = spec.dim() {
        if let Some(bad) = points.iter().position(|x| x.len() != d) {
            return Err(invalid("points", format!("point {bad} has dimension {}, oracle expects {d}", points[bad].len())));
        }
    }
    Ok(points)
}

// Setup queries used to pick benign originals are charged to a throwaway
// ledger, never to an attack run.
fn random_points(config: &ExperimentConfig, spec: &OracleSpec, oracle_index: usize) -> Result<Vec<Vec<f64>>, HarnessError> {
    let dim = spec
        .dim()
        .ok_or_else(|| invalid("points.source", "random points need an oracle of known dimension"))?;
    let count = config.points.count.expect("validated");
    let (lo, hi) = (config.attack.clip_low, config.attack.clip_high);
    let mut rng = SeedStream::new(config.points.seed).path(&[oracle_index as u64]).rng();
    let mut out = Vec::with_capacity(count);
    let mut ledger = QueryLedger::new();
    for _ in 0..count * 1000 {
        if out.len() == count {
            break;
        }
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(lo..=hi)).collect();
        let oracle = spec.build(&x)?;
        if !decide(&oracle, &x, &mut ledger, Phase::Init)?.is_adversarial() {
            out.push(x);
        }
    }
    if out.len() < count {
        return Err(invalid("points.count", format!("found only {} benign random points", out.len())));
    }
    Ok(out)
}

struct Job<'a> {
    oracle_index: usize,
    point_index: usize,
    sampler: SamplerKind,
    repetition: u32,
    spec: &'a OracleSpec,
    original: &'a [f64],
    target: Option<&'a [f64]>,
}

fn run_job(config: &ExperimentConfig, job: &Job<'_>) -> RunRecord {
    let seed = run_seed(config.experiment.base_seed, job.oracle_index, job.point_index, job.repetition);
    let attack = config.attack_config(seed, job.sampler, job.target.map(<[f64]>::to_vec));
    let trace = match job.spec.build(job.original) {
        Ok(oracle) => match run_attack(&oracle, job.original, &attack) {
            Ok(outcome) => outcome.trace,
            Err(e) => failed_trace(job.sampler, seed, Status::InitFailed, e.to_string()),
        },
        Err(e) => failed_trace(job.sampler, seed, Status::OracleFailed, e.to_string()),
    };
    RunRecord {
        oracle_index: job.oracle_index,
        point_index: job.point_index,
        sampler: job.sampler,
        repetition: job.repetition,
        seed,
        trace,
    }
}

fn failed_trace(sampler: SamplerKind, seed: u64, status: Status, message: String) -> AttackTrace {
    let mut t = AttackTrace::new(sampler, seed);
    t.status = status;
    t.failure = Some(message);
    t
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn summarize(config: &ExperimentConfig, runs: &[RunRecord]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for (oi, name) in config.experiment.oracles.iter().enumerate() {
        for &sampler in &config.experiment.samplers {
            let group: Vec<&RunRecord> = runs
                .iter()
                .filter(|r| r.oracle_index == oi && r.sampler == sampler)
                .collect();
            for &budget in &config.experiment.budgets {
                let values: Vec<f64> = group.iter().filter_map(|r| r.trace.best_within(budget)).collect();
                let failures = group.len() - values.len();
                for (statistic, value) in [(Statistic::Mean, mean(&values)), (Statistic::Median, median(&values))] {
                    rows.push(SummaryRow {
                        oracle: name.clone(),
                        sampler,
                        budget,
                        statistic,
                        distortion: value,
                        repetitions: values.len(),
                        failures,
                    });
                }
            }
        }
    }
    rows
}

fn runs_csv(runs: &[RunRecord]) -> String {
    let mut out = String::from("oracle,point,sampler,repetition,seed,status,queries,final_distortion,message\n");
    for r in runs {
        let message = r.trace.failure.as_deref().unwrap_or("").replace(['"', ',', '\n'], " ");
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{:.16e},{}\n",
            r.oracle_index,
            r.point_index,
            r.sampler,
            r.repetition,
            r.seed,
            r.trace.status,
            r.trace.ledger.total(),
            r.trace.final_distortion().unwrap_or(f64::NAN),
            message
        ));
    }
    out
}

/// Runs every (oracle, point, sampler, repetition) combination and reduces
/// the traces to mean and median distortion per budget. Run failures are
/// recorded in the traces and counted in the summary; they do not abort the
/// batch.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    config.validate()?;
    let specs = config.oracle_specs()?;
    let mut originals = Vec::with_capacity(specs.len());
    for (oi, spec) in specs.iter().enumerate() {
        originals.push(resolve_points(config, spec, oi)?);
    }
    let targets = match (&config.attack.mode, &config.points.targets_path) {
        (ModeName::Targeted, Some(path)) => Some(read_points(path)?),
        _ => None,
    };

    let mut jobs = Vec::new();
    for (oi, spec) in specs.iter().enumerate() {
        for (pi, original) in originals[oi].iter().enumerate() {
            let target = match &targets {
                Some(t) => Some(
                    t.get(pi)
                        .ok_or_else(|| invalid("points.targets_path", format!("no start image for point {pi}")))?
                        .as_slice(),
                ),
                None => None,
            };
            for &sampler in &config.experiment.samplers {
                for repetition in 0..config.experiment.repetitions {
                    jobs.push(Job {
                        oracle_index: oi,
                        point_index: pi,
                        sampler,
                        repetition,
                        spec,
                        original,
                        target,
                    });
                }
            }
        }
    }

    let run_all = || jobs.par_iter().map(|job| run_job(config, job)).collect::<Vec<_>>();
    let runs = if config.experiment.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.experiment.workers)
            .build()
            .map_err(|e| HarnessError::Config(format!("cannot start worker pool: {e}")))?
            .install(run_all)
    } else {
        run_all()
    };
    let summary = summarize(config, &runs);

    if let Some(dir) = &config.experiment.output_dir {
        let traces = dir.join("traces");
        fs::create_dir_all(&traces)?;
        for run in &runs {
            emit_trace_csv(&run.trace, traces.join(run.file_name()))?;
        }
        write_summary_csv(&summary, dir.join("summary.csv"))?;
        fs::write(dir.join("runs.csv"), runs_csv(&runs))?;
    }
    Ok(ExperimentReport { runs, summary })
}
