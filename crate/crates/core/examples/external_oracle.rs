//! Attacks an oracle living in another process. The example re-runs itself
//! with `serve` as the oracle side of the line protocol.

use std::io;
use std::time::Duration;

use lhs_attack::harness::trace_to_csv;
use lhs_attack::oracle::{serve, ExternalOracle, Halfspace};
use lhs_attack::{run_attack, AttackConfig};

fn halfspace() -> anyhow::Result<Halfspace> {
    Ok(Halfspace::new(vec![1.0, 0.5, -0.25, 0.75], -0.9)?)
}

fn main() -> anyhow::Result<()> {
    if std::env::args().nth(1).as_deref() == Some("serve") {
        serve(&halfspace()?, io::stdin().lock(), io::stdout().lock())?;
        return Ok(());
    }

    let me = std::env::current_exe()?;
    let remote = ExternalOracle::spawn(&me.to_string_lossy(), &["serve".to_owned()], 4, Duration::from_secs(5))?;
    let original = vec![0.2; 4];
    let config = AttackConfig {
        initial_samples: 20,
        iterations: 15,
        seed: 3,
        ..AttackConfig::default()
    };
    let external = run_attack(&remote, &original, &config)?.trace;
    let local = run_attack(&halfspace()?, &original, &config)?.trace;
    println!("external distortion {:.6}", external.final_distortion().unwrap_or(f64::NAN));
    println!("traces identical: {}", trace_to_csv(&external) == trace_to_csv(&local));
    Ok(())
}
