//! Full attack on a hypersphere, whose optimal distortion is its radius.

use lhs_attack::harness::trace_to_csv;
use lhs_attack::oracle::Hypersphere;
use lhs_attack::{run_attack, AttackConfig, SamplerKind};

fn main() -> anyhow::Result<()> {
    let m = 20;
    let original = vec![0.5; m];
    let oracle = Hypersphere::new(original.clone(), 0.5)?;
    let config = AttackConfig {
        iterations: 30,
        sampler: SamplerKind::Lhs,
        seed: 7,
        ..AttackConfig::default()
    };
    let outcome = run_attack(&oracle, &original, &config)?;
    print!("{}", trace_to_csv(&outcome.trace));
    println!(
        "final distortion {:.6} after {} queries",
        outcome.trace.final_distortion().unwrap_or(f64::NAN),
        outcome.trace.ledger.total()
    );
    Ok(())
}
