//! The boundary attack: start from any adversarial point, project it onto
//! the decision boundary, then alternate sign-based gradient estimation,
//! a step along the estimate, and bisection back to the boundary.

mod run;
mod schedule;
mod steps;

use std::fmt;

use thiserror::Error;

use crate::oracle::{decide, Decision, DecisionOracle, OracleError, Phase, QueryLedger};
use crate::sampler::{SamplerError, SamplerKind};

pub use run::{run_attack, AttackOutcome, AttackTrace, Status, TraceRow};
pub use schedule::{
    bisection_steps, clip, default_theta, distance, schedule_delta, schedule_epsilon, schedule_m,
};
pub use steps::{
    bin_search, estimate_from_batch, estimate_gradient, initialize_adversarial, step_forward, unit_batch,
    BoundaryPoint, GradientEstimate, Step,
};

#[derive(Debug, Error)]
pub enum AttackError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error("query budget exhausted")]
    BudgetExhausted,
    #[error("initialization failed: {0}")]
    InitFailed(String),
    #[error("no adversarial step found after {retries} halvings")]
    StepFailed { retries: u32 },
    #[error("gradient estimate vanished on two independent batches")]
    EstimateDegenerate,
    #[error("invalid attack configuration: {0}")]
    InvalidConfig(String),
    #[error("{0}")]
    Domain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AttackMode {
    #[default]
    Untargeted,
    Targeted,
}

impl fmt::Display for AttackMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttackMode::Untargeted => "untargeted",
            AttackMode::Targeted => "targeted",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackConfig {
    /// Sample count of the first gradient estimate (M0).
    pub initial_samples: usize,
    /// Iteration cap (T).
    pub iterations: usize,
    /// Bisection threshold in α-space; `None` means m^(-3/2).
    pub theta: Option<f64>,
    pub max_queries: Option<u64>,
    pub sampler: SamplerKind,
    pub mode: AttackMode,
    pub seed: u64,
    /// Starting image for targeted attacks.
    pub init_target: Option<Vec<f64>>,
    pub max_init_tries: u32,
    pub max_step_retries: u32,
    pub clip_low: f64,
    pub clip_high: f64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            initial_samples: 100,
            iterations: 64,
            theta: None,
            max_queries: None,
            sampler: SamplerKind::Lhs,
            mode: AttackMode::Untargeted,
            seed: 0,
            init_target: None,
            max_init_tries: 1000,
            max_step_retries: 30,
            clip_low: 0.0,
            clip_high: 1.0,
        }
    }
}

impl AttackConfig {
    pub fn validate(&self) -> Result<(), AttackError> {
        let fail = |msg: &str| Err(AttackError::InvalidConfig(msg.to_owned()));
        if self.initial_samples == 0 {
            return fail("initial sample count must be at least 1");
        }
        if self.iterations == 0 {
            return fail("iteration count must be at least 1");
        }
        if let Some(theta) = self.theta {
            if !(theta > 0.0 && theta < 1.0) {
                return fail("theta must lie in (0, 1)");
            }
        }
        if !self.clip_low.is_finite() || !self.clip_high.is_finite() || self.clip_low >= self.clip_high {
            return fail("clip bounds must be finite with clip_low < clip_high");
        }
        if self.mode == AttackMode::Targeted && self.init_target.is_none() {
            return fail("targeted attacks need an initial target image");
        }
        Ok(())
    }

    pub fn theta_for(&self, m: usize) -> f64 {
        self.theta.unwrap_or_else(|| default_theta(m))
    }

    fn clip(&self, x: &[f64]) -> Vec<f64> {
        clip(x, self.clip_low, self.clip_high)
    }
}

/// An oracle plus the ledger and budget of one attack run. Every query the
/// attack makes goes through [`QuerySession::decide`].
pub struct QuerySession<'a> {
    oracle: &'a dyn DecisionOracle,
    ledger: QueryLedger,
    budget: Option<u64>,
}

impl<'a> QuerySession<'a> {
    pub fn new(oracle: &'a dyn DecisionOracle, budget: Option<u64>) -> Self {
        Self {
            oracle,
            ledger: QueryLedger::new(),
            budget,
        }
    }

    pub fn dim(&self) -> usize {
        self.oracle.dim()
    }

    pub fn ledger(&self) -> &QueryLedger {
        &self.ledger
    }

    pub fn queries(&self) -> u64 {
        self.ledger.total()
    }

    /// Fails with [`AttackError::BudgetExhausted`] instead of exceeding the
    /// budget.
    pub fn decide(&mut self, x: &[f64], phase: Phase) -> Result<Decision, AttackError> {
        if self.budget.is_some_and(|b| self.ledger.total() >= b) {
            return Err(AttackError::BudgetExhausted);
        }
        Ok(decide(self.oracle, x, &mut self.ledger, phase)?)
    }
}
