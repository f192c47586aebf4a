//! Decision-based black-box adversarial attack with Latin Hypercube
//! gradient estimation.
//!
//! The attack only ever sees a hard label: `+1` if a point is adversarial
//! with respect to the original, `-1` otherwise. It walks along the
//! decision boundary, estimating the boundary normal from the signs of
//! randomly perturbed probes. Probe directions come from a Latin Hypercube
//! sample of the standard normal ([`sampler::lhs_normal`]), with simple
//! random sampling ([`sampler::srs_normal`]) available as a baseline.
//!
//! - [`sampler`]: noise batches and their uniformity diagnostics.
//! - [`oracle`]: hard-label oracles, query accounting, the external
//!   process protocol and the MLP weights format.
//! - [`attack`]: initialization, bisection, gradient estimation, stepping
//!   and the main loop.
//! - [`harness`]: experiment configs, batch runs, CSV output.
//! - [`cli`]: the `lhs-attack` command line.

pub mod attack;
pub mod cli;
pub mod harness;
pub mod oracle;
pub mod rng;
pub mod sampler;

pub use attack::{run_attack, AttackConfig, AttackOutcome, AttackTrace, Status};
pub use oracle::{decide, Decision, DecisionOracle, OracleSpec, Phase, QueryLedger};
pub use rng::SeedStream;
pub use sampler::SamplerKind;
