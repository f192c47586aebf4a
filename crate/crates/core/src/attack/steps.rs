//! The individual moves of the attack. Each takes the [`QuerySession`] it
//! may spend queries from.

use rand::Rng;

use super::{bisection_steps, AttackConfig, AttackError, AttackMode, QuerySession};
use crate::oracle::Phase;
use crate::rng::SeedStream;
use crate::sampler::{draw, normalize_rows, SampleBatch, SamplerError, SamplerKind};

/// A point on the adversarial side within θ (in α-space) of the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPoint {
    pub point: Vec<f64>,
    /// Blend weight of the original at the returned point.
    pub alpha: f64,
    /// Width of the final bisection interval.
    pub alpha_gap: f64,
    /// Queries spent by the bisection.
    pub steps: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    /// Unit-norm search direction.
    pub direction: Vec<f64>,
    /// (1/M) Σ C(x + δ nᵢ) nᵢ before normalization.
    pub raw_mean: Vec<f64>,
    /// Probes answered `+1`.
    pub agree_count: usize,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub point: Vec<f64>,
    pub epsilon: f64,
    /// Number of times ε was halved before the candidate was adversarial.
    pub retries: u32,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn unit(v: &[f64]) -> Option<Vec<f64>> {
    let n = norm(v);
    (n > 1e-12 && n.is_finite()).then(|| v.iter().map(|x| x / n).collect())
}

/// Finds a first adversarial point without looking at the original.
///
/// Untargeted: uniform draws from the clip box until one is adversarial.
/// Targeted: the configured target image, after a single check.
/// The original itself is never queried.
pub fn initialize_adversarial(
    session: &mut QuerySession<'_>,
    original: &[f64],
    config: &AttackConfig,
    stream: SeedStream,
) -> Result<Vec<f64>, AttackError> {
    match config.mode {
        AttackMode::Targeted => {
            let target = config
                .init_target
                .as_ref()
                .ok_or_else(|| AttackError::InvalidConfig("targeted attack without a target image".into()))?;
            if target.len() != original.len() {
                return Err(AttackError::InvalidConfig("target image dimension differs from the original".into()));
            }
            let x = config.clip(target);
            if session.decide(&x, Phase::Init)?.is_adversarial() {
                Ok(x)
            } else {
                Err(AttackError::InitFailed("target image is not adversarial".into()))
            }
        }
        AttackMode::Untargeted => {
            let mut rng = stream.rng();
            for _ in 0..config.max_init_tries {
                let x: Vec<f64> = (0..original.len())
                    .map(|_| rng.random_range(config.clip_low..=config.clip_high))
                    .collect();
                if session.decide(&x, Phase::Init)?.is_adversarial() {
                    return Ok(x);
                }
            }
            Err(AttackError::InitFailed(format!(
                "no adversarial uniform draw in {} tries",
                config.max_init_tries
            )))
        }
    }
}

/// Bisects the segment x(α) = α·x* + (1−α)·x_adv for the boundary,
/// keeping the low-α end adversarial. Costs exactly ⌈log₂(1/θ)⌉ queries;
/// the endpoints themselves are assumed, not checked.
pub fn bin_search(
    session: &mut QuerySession<'_>,
    adversarial: &[f64],
    original: &[f64],
    theta: f64,
    config: &AttackConfig,
) -> Result<BoundaryPoint, AttackError> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(AttackError::Domain(format!("theta must lie in (0, 1), got {theta}")));
    }
    if adversarial.len() != original.len() {
        return Err(AttackError::Domain("bisection endpoints differ in dimension".into()));
    }
    let blend = |alpha: f64| -> Vec<f64> {
        let mixed: Vec<f64> = adversarial
            .iter()
            .zip(original)
            .map(|(a, o)| alpha * o + (1.0 - alpha) * a)
            .collect();
        config.clip(&mixed)
    };
    let steps = bisection_steps(theta);
    let (mut low, mut high) = (0.0f64, 1.0f64);
    for _ in 0..steps {
        let mid = 0.5 * (low + high);
        if session.decide(&blend(mid), Phase::BinSearch)?.is_adversarial() {
            low = mid;
        } else {
            high = mid;
        }
    }
    Ok(BoundaryPoint {
        point: blend(low),
        alpha: low,
        alpha_gap: high - low,
        steps,
    })
}

/// `count` unit noise vectors. A zero row (possible only through
/// underflow) triggers a redraw from the next substream.
pub fn unit_batch(kind: SamplerKind, count: usize, dim: usize, stream: SeedStream) -> Result<SampleBatch, AttackError> {
    let mut last = None;
    for attempt in 0..4 {
        match normalize_rows(draw(kind, count, dim, stream.child(attempt))?) {
            Ok(batch) => return Ok(batch),
            Err(e @ SamplerError::DegenerateSample { .. }) => last = Some(e),
            Err(e) => return Err(e.into()),
        }
    }
    Err(last.expect("loop ran").into())
}

/// Sign-weighted mean of the unit rows of `batch`, probed at radius
/// `delta` around `x`. One query per row.
pub fn estimate_from_batch(
    session: &mut QuerySession<'_>,
    x: &[f64],
    batch: &SampleBatch,
    delta: f64,
    config: &AttackConfig,
) -> Result<GradientEstimate, AttackError> {
    if delta.is_nan() || delta <= 0.0 {
        return Err(AttackError::Domain(format!("probe radius must be positive, got {delta}")));
    }
    if batch.dim() != x.len() {
        return Err(AttackError::Domain("noise dimension differs from the point".into()));
    }
    let dim = x.len();
    let count = batch.count();
    let mut signed = vec![0.0; dim];
    let mut plain = vec![0.0; dim];
    let mut agree = 0;
    let mut probe = vec![0.0; dim];
    for row in batch.rows() {
        for ((p, xi), ni) in probe.iter_mut().zip(x).zip(row) {
            *p = (xi + delta * ni).clamp(config.clip_low, config.clip_high);
        }
        let sign = session.decide(&probe, Phase::Gradient)?.sign();
        if sign > 0.0 {
            agree += 1;
        }
        for ((s, p), ni) in signed.iter_mut().zip(plain.iter_mut()).zip(row) {
            *s += sign * ni;
            *p += ni;
        }
    }
    let scale = 1.0 / count as f64;
    let raw_mean: Vec<f64> = signed.iter().map(|v| v * scale).collect();

    // All probes on one side: the estimate reduces to ±(mean noise).
    let direction = if agree == count {
        unit(&plain)
    } else if agree == 0 {
        unit(&plain).map(|d| d.into_iter().map(|v| -v).collect())
    } else {
        unit(&raw_mean)
    };
    let direction = direction.ok_or(AttackError::EstimateDegenerate)?;
    Ok(GradientEstimate {
        direction,
        raw_mean,
        agree_count: agree,
        samples: count,
    })
}

/// Draws `samples` unit vectors with `sampler` and estimates the boundary
/// normal at `x_t`. A vanishing estimate is retried once on a fresh
/// substream.
pub fn estimate_gradient(
    session: &mut QuerySession<'_>,
    x_t: &BoundaryPoint,
    samples: usize,
    delta: f64,
    sampler: SamplerKind,
    stream: SeedStream,
    config: &AttackConfig,
) -> Result<GradientEstimate, AttackError> {
    if samples == 0 {
        return Err(AttackError::Domain("gradient estimate needs at least one sample".into()));
    }
    for attempt in 0..2 {
        let batch = unit_batch(sampler, samples, x_t.point.len(), stream.child(attempt))?;
        match estimate_from_batch(session, &x_t.point, &batch, delta, config) {
            Err(AttackError::EstimateDegenerate) => continue,
            other => return other,
        }
    }
    Err(AttackError::EstimateDegenerate)
}

/// Moves `epsilon` along the estimate, halving ε until the candidate is
/// adversarial or `max_step_retries` halvings have failed.
pub fn step_forward(
    session: &mut QuerySession<'_>,
    x_t: &BoundaryPoint,
    gradient: &GradientEstimate,
    epsilon: f64,
    config: &AttackConfig,
) -> Result<Step, AttackError> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(AttackError::Domain(format!("step size must be positive, got {epsilon}")));
    }
    let mut eps = epsilon;
    let mut retries = 0;
    loop {
        let candidate: Vec<f64> = x_t
            .point
            .iter()
            .zip(&gradient.direction)
            .map(|(x, d)| (x + eps * d).clamp(config.clip_low, config.clip_high))
            .collect();
        if session.decide(&candidate, Phase::Step)?.is_adversarial() {
            return Ok(Step {
                point: candidate,
                epsilon: eps,
                retries,
            });
        }
        if retries == config.max_step_retries {
            return Err(AttackError::StepFailed { retries });
        }
        retries += 1;
        eps *= 0.5;
    }
}
