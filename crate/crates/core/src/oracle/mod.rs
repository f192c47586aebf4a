//! Sign-only decision oracles.
//!
//! An oracle answers one question about a point: is it adversarial with
//! respect to the original (`+1`) or not (`-1`)? Scores, logits and margins
//! stay inside the oracle implementations. All attack-side access goes
//! through [`decide`], which charges exactly one query to a [`QueryLedger`].

mod analytic;
mod external;
mod mlp;
mod spec;

use std::fmt;

use thiserror::Error;

pub use analytic::{Halfspace, Hypersphere};
pub use external::{format_request, parse_request, serve, ExternalOracle, DEFAULT_TIMEOUT};
pub use mlp::{load_mlp, parse_mlp, save_mlp, Activation, Layer, MlpModel, MlpOracle};
pub use spec::{OracleKind, OracleSpec};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{0}")]
    Domain(String),
    #[error("oracle does not support {0}")]
    Unsupported(&'static str),
    #[error("external oracle timed out after {0:?}")]
    Timeout(std::time::Duration),
    #[error("external oracle protocol error: {0}")]
    Protocol(String),
    #[error("external oracle i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to load model: {0}")]
    Load(#[from] mlp::LoadError),
}

/// C(x): `+1` (adversarial) or `-1` (not adversarial).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Adversarial,
    Benign,
}

impl Decision {
    pub fn from_adversarial(adv: bool) -> Self {
        if adv {
            Decision::Adversarial
        } else {
            Decision::Benign
        }
    }

    pub fn is_adversarial(self) -> bool {
        self == Decision::Adversarial
    }

    pub fn value(self) -> i8 {
        match self {
            Decision::Adversarial => 1,
            Decision::Benign => -1,
        }
    }

    pub fn sign(self) -> f64 {
        f64::from(self.value())
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Adversarial => "+1",
            Decision::Benign => "-1",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    #[default]
    Untargeted,
    Targeted { target: usize },
}

/// What a query was spent on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Init,
    BinSearch,
    Gradient,
    Step,
}

impl Phase {
    pub const ALL: [Phase; 4] = [Phase::Init, Phase::BinSearch, Phase::Gradient, Phase::Step];

    fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Phase::Init => "init",
            Phase::BinSearch => "binsearch",
            Phase::Gradient => "gradient",
            Phase::Step => "step",
        }
    }
}

/// Per-phase query counts. The total is always the sum of the phases.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryLedger {
    per_phase: [u64; 4],
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn total(&self) -> u64 {
        self.per_phase.iter().sum()
    }

    pub fn phase(&self, phase: Phase) -> u64 {
        self.per_phase[phase.index()]
    }

    fn record(&mut self, phase: Phase) {
        self.per_phase[phase.index()] += 1;
    }
}

/// A hard-label model. Implementors answer single queries; callers go
/// through [`decide`] so every answer is accounted for.
pub trait DecisionOracle: Send + Sync {
    /// Input dimension m.
    fn dim(&self) -> usize;

    /// Raw answer for `x`. `x.len() == self.dim()` is checked by [`decide`].
    fn answer(&self, x: &[f64]) -> Result<Decision, OracleError>;

    /// Unit normal of the decision boundary at `x`, pointing towards the
    /// adversarial side. Only analytic oracles know it.
    fn true_gradient(&self, _x: &[f64]) -> Result<Vec<f64>, OracleError> {
        Err(OracleError::Unsupported("true_gradient"))
    }
}

impl<T: DecisionOracle + ?Sized> DecisionOracle for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn answer(&self, x: &[f64]) -> Result<Decision, OracleError> {
        (**self).answer(x)
    }

    fn true_gradient(&self, x: &[f64]) -> Result<Vec<f64>, OracleError> {
        (**self).true_gradient(x)
    }
}

impl<T: DecisionOracle + ?Sized> DecisionOracle for std::sync::Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn answer(&self, x: &[f64]) -> Result<Decision, OracleError> {
        (**self).answer(x)
    }

    fn true_gradient(&self, x: &[f64]) -> Result<Vec<f64>, OracleError> {
        (**self).true_gradient(x)
    }
}

/// Queries `oracle` at `x`, charging one query to `ledger` under `phase`.
///
/// A query that reaches the oracle is charged even if the oracle then
/// fails (an external process may have seen it).
pub fn decide(
    oracle: &(impl DecisionOracle + ?Sized),
    x: &[f64],
    ledger: &mut QueryLedger,
    phase: Phase,
) -> Result<Decision, OracleError> {
    let expected = oracle.dim();
    if x.len() != expected {
        return Err(OracleError::DimensionMismatch {
            expected,
            got: x.len(),
        });
    }
    ledger.record(phase);
    oracle.answer(x)
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<(), OracleError> {
    if expected == got {
        Ok(())
    } else {
        Err(OracleError::DimensionMismatch { expected, got })
    }
}
