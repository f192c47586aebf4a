use std::fmt;

use super::{
    bin_search, distance, estimate_gradient, initialize_adversarial, schedule_delta, schedule_epsilon, schedule_m,
    step_forward, AttackConfig, AttackError, BoundaryPoint, QuerySession,
};
use crate::oracle::{DecisionOracle, QueryLedger};
use crate::rng::SeedStream;
use crate::sampler::SamplerKind;

const INIT_STREAM: u64 = 0;
const GRADIENT_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Completed,
    BudgetExhausted,
    InitFailed,
    OracleFailed,
    /// Two consecutive iterations found no adversarial step.
    Stalled,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Completed => "Completed",
            Status::BudgetExhausted => "BudgetExhausted",
            Status::InitFailed => "InitFailed",
            Status::OracleFailed => "OracleFailed",
            Status::Stalled => "Stalled",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            Status::Completed,
            Status::BudgetExhausted,
            Status::InitFailed,
            Status::OracleFailed,
            Status::Stalled,
        ]
        .into_iter()
        .find(|st| st.as_str() == s)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One boundary point of the run. Row 0 is the projected initialization
/// (no schedule values); row t is the point after iteration t.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub samples: usize,
    pub delta: f64,
    pub epsilon: f64,
    /// Ledger total when the row was recorded.
    pub queries: u64,
    pub distortion: f64,
    pub agree_count: usize,
    pub step_retries: u32,
    pub binsearch_steps: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackTrace {
    pub rows: Vec<TraceRow>,
    pub status: Status,
    pub ledger: QueryLedger,
    pub sampler: SamplerKind,
    pub seed: u64,
    pub failure: Option<String>,
}

impl AttackTrace {
    pub fn new(sampler: SamplerKind, seed: u64) -> Self {
        Self {
            rows: Vec::new(),
            status: Status::Completed,
            ledger: QueryLedger::new(),
            sampler,
            seed,
            failure: None,
        }
    }

    pub fn final_distortion(&self) -> Option<f64> {
        self.rows.last().map(|r| r.distortion)
    }

    /// Smallest distortion among rows recorded within `budget` queries.
    pub fn best_within(&self, budget: u64) -> Option<f64> {
        self.rows
            .iter()
            .filter(|r| r.queries <= budget)
            .map(|r| r.distortion)
            .min_by(f64::total_cmp)
    }
}

#[derive(Debug, Clone)]
pub struct AttackOutcome {
    /// Final adversarial point; `None` when no adversarial point was found.
    pub adversarial: Option<Vec<f64>>,
    pub trace: AttackTrace,
}

struct Best {
    point: Vec<f64>,
    distortion: f64,
}

impl Best {
    fn offer(slot: &mut Option<Best>, point: &[f64], original: &[f64]) {
        let d = distance(point, original);
        if slot.as_ref().is_none_or(|b| d < b.distortion) {
            *slot = Some(Best {
                point: point.to_vec(),
                distortion: d,
            });
        }
    }
}

/// Runs the full attack against `oracle` starting from `original`.
///
/// Bad inputs are reported as `Err`. Failures during the run (no
/// adversarial start, a broken oracle, an exhausted budget) end the run
/// early and are reported through [`AttackTrace::status`].
pub fn run_attack(
    oracle: &dyn DecisionOracle,
    original: &[f64],
    config: &AttackConfig,
) -> Result<AttackOutcome, AttackError> {
    config.validate()?;
    let m = oracle.dim();
    if original.len() != m {
        return Err(AttackError::InvalidConfig(format!(
            "original has dimension {}, oracle expects {m}",
            original.len()
        )));
    }
    if original
        .iter()
        .any(|v| !v.is_finite() || *v < config.clip_low || *v > config.clip_high)
    {
        return Err(AttackError::InvalidConfig("original lies outside the clip box".into()));
    }
    let theta = config.theta_for(m);
    let stream = SeedStream::new(config.seed);
    let mut session = QuerySession::new(oracle, config.max_queries);
    let mut trace = AttackTrace::new(config.sampler, config.seed);
    let mut best: Option<Best> = None;

    let finish = |session: QuerySession<'_>,
                  mut trace: AttackTrace,
                  status: Status,
                  failure: Option<&AttackError>,
                  point: Option<Vec<f64>>| {
        trace.status = status;
        trace.failure = failure.map(ToString::to_string);
        trace.ledger = session.ledger().clone();
        Ok(AttackOutcome {
            adversarial: point,
            trace,
        })
    };
    let status_of = |e: &AttackError| match e {
        AttackError::BudgetExhausted => Status::BudgetExhausted,
        AttackError::InitFailed(_) => Status::InitFailed,
        AttackError::Oracle(_) => Status::OracleFailed,
        _ => Status::Stalled,
    };

    let start = match initialize_adversarial(&mut session, original, config, stream.child(INIT_STREAM)) {
        Ok(x) => x,
        Err(e) => return finish(session, trace, status_of(&e), Some(&e), None),
    };
    Best::offer(&mut best, &start, original);

    let mut current: BoundaryPoint = match bin_search(&mut session, &start, original, theta, config) {
        Ok(b) => b,
        Err(e) => return finish(session, trace, status_of(&e), Some(&e), Some(start)),
    };
    Best::offer(&mut best, &current.point, original);
    trace.rows.push(TraceRow {
        t: 0,
        samples: 0,
        delta: 0.0,
        epsilon: 0.0,
        queries: session.queries(),
        distortion: distance(&current.point, original),
        agree_count: 0,
        step_retries: 0,
        binsearch_steps: current.steps,
    });

    let mut failed_steps = 0;
    for t in 1..=config.iterations {
        let gradient_stream = stream.path(&[GRADIENT_STREAM, t as u64]);
        match iterate(&mut session, &mut current, original, t, theta, config, gradient_stream) {
            Ok(Iteration::Advanced(row)) => {
                failed_steps = 0;
                Best::offer(&mut best, &current.point, original);
                trace.rows.push(row);
            }
            Ok(Iteration::StepFailed(row)) => {
                failed_steps += 1;
                trace.rows.push(row);
                if failed_steps >= 2 {
                    let e = AttackError::Domain("two consecutive iterations found no adversarial step".into());
                    let point = best.map(|b| b.point);
                    return finish(session, trace, Status::Stalled, Some(&e), point);
                }
            }
            Err(e) => {
                let point = best.map(|b| b.point);
                return finish(session, trace, status_of(&e), Some(&e), point);
            }
        }
    }
    let point = current.point;
    finish(session, trace, Status::Completed, None, Some(point))
}

enum Iteration {
    Advanced(TraceRow),
    /// No adversarial step was found; the row repeats the current point.
    StepFailed(TraceRow),
}

fn iterate(
    session: &mut QuerySession<'_>,
    current: &mut BoundaryPoint,
    original: &[f64],
    t: usize,
    theta: f64,
    config: &AttackConfig,
    stream: SeedStream,
) -> Result<Iteration, AttackError> {
    let samples = schedule_m(t - 1, config.initial_samples);
    let delta = schedule_delta(&current.point, original, original.len())?;
    let epsilon = schedule_epsilon(t, &current.point, original)?;
    let mut row = TraceRow {
        t,
        samples,
        delta,
        epsilon,
        queries: 0,
        distortion: distance(&current.point, original),
        agree_count: 0,
        step_retries: 0,
        binsearch_steps: 0,
    };

    let step = estimate_gradient(session, current, samples, delta, config.sampler, stream, config).and_then(|g| {
        row.agree_count = g.agree_count;
        step_forward(session, current, &g, epsilon, config)
    });
    let step = match step {
        Ok(step) => step,
        Err(AttackError::StepFailed { retries }) => {
            row.step_retries = retries;
            row.queries = session.queries();
            return Ok(Iteration::StepFailed(row));
        }
        Err(AttackError::EstimateDegenerate) => {
            row.queries = session.queries();
            return Ok(Iteration::StepFailed(row));
        }
        Err(e) => return Err(e),
    };
    row.step_retries = step.retries;

    let next = bin_search(session, &step.point, original, theta, config)?;
    debug_assert!(next.alpha_gap <= theta);
    *current = next;
    row.binsearch_steps = current.steps;
    row.queries = session.queries();
    row.distortion = distance(&current.point, original);
    Ok(Iteration::Advanced(row))
}
