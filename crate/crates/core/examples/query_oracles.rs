//! Queries the built-in oracles through a ledger.

use lhs_attack::oracle::{DecisionOracle, OracleSpec};
use lhs_attack::{decide, Phase, QueryLedger};

fn main() -> anyhow::Result<()> {
    let mut ledger = QueryLedger::new();

    let halfspace = OracleSpec::parse("halfspace:m=3,b=-0.5")?.build(&[0.0; 3])?;
    for x in [[0.9, 0.0, 0.0], [0.5, 0.0, 0.0], [0.1, 1.0, 1.0]] {
        println!("halfspace {x:?} -> {}", decide(&halfspace, &x, &mut ledger, Phase::Init)?);
    }
    println!("halfspace normal: {:?}", halfspace.true_gradient(&[0.0; 3])?);

    let center = [0.5; 3];
    let sphere = OracleSpec::parse("hypersphere:m=3,r=0.25")?.build(&center)?;
    for x in [[0.5, 0.5, 0.6], [0.5, 0.5, 0.9]] {
        println!("hypersphere {x:?} -> {}", decide(&sphere, &x, &mut ledger, Phase::Gradient)?);
    }

    println!("queries: {} (init {}, gradient {})", ledger.total(), ledger.phase(Phase::Init), ledger.phase(Phase::Gradient));
    Ok(())
}
