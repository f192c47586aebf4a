//! Untargeted attack on the bundled 8×8 digits classifier, comparing LHS
//! and SRS on the same original and seed.

use std::path::Path;
use std::sync::Arc;

use lhs_attack::harness::read_points;
use lhs_attack::oracle::{load_mlp, MlpOracle, Mode};
use lhs_attack::{run_attack, AttackConfig, SamplerKind};

fn main() -> anyhow::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let model = Arc::new(load_mlp(fixtures.join("digits01_mlp.txt"))?);
    let points = read_points(fixtures.join("digits01_points.txt"))?;
    let index = std::env::args().nth(1).map_or(Ok(0), |s| s.parse())?;
    let original = &points[index];
    let oracle = MlpOracle::new(model, original, Mode::Untargeted)?;
    println!("original {index} is class {}", oracle.original_class());

    for sampler in [SamplerKind::Lhs, SamplerKind::Srs] {
        let config = AttackConfig {
            sampler,
            seed: 1,
            max_queries: Some(5_000),
            ..AttackConfig::default()
        };
        let trace = run_attack(&oracle, original, &config)?.trace;
        for budget in [1_000, 5_000] {
            println!("{sampler} budget {budget}: distortion {:.4}", trace.best_within(budget).unwrap_or(f64::NAN));
        }
        println!("{sampler} status {}", trace.status);
    }
    Ok(())
}
