//! Estimates the normal of a halfspace from sign-only queries and shows the
//! cosine with the true normal as the sample count grows.

use lhs_attack::attack::{estimate_gradient, AttackConfig, BoundaryPoint, QuerySession};
use lhs_attack::oracle::{DecisionOracle, Halfspace};
use lhs_attack::{SamplerKind, SeedStream};

fn main() -> anyhow::Result<()> {
    let m = 100;
    let w: Vec<f64> = (0..m).map(|i| ((i * 37 % 11) as f64 - 5.0) / 5.0).collect();
    let x = vec![0.5; m];
    let b = -w.iter().zip(&x).map(|(a, c)| a * c).sum::<f64>();
    let oracle = Halfspace::new(w, b)?;
    let normal = oracle.true_gradient(&x)?;
    let at = BoundaryPoint {
        point: x,
        alpha: 0.0,
        alpha_gap: 0.0,
        steps: 0,
    };

    for samples in [10, 100, 1000] {
        for sampler in [SamplerKind::Lhs, SamplerKind::Srs] {
            let mut total = 0.0;
            let trials = 20;
            for seed in 0..trials {
                let mut session = QuerySession::new(&oracle, None);
                let g = estimate_gradient(&mut session, &at, samples, 1e-3, sampler, SeedStream::new(seed), &AttackConfig::default())?;
                total += g.direction.iter().zip(&normal).map(|(a, b)| a * b).sum::<f64>();
            }
            println!("M={samples:>4} {sampler}: mean cosine {:.4}", total / trials as f64);
        }
    }
    Ok(())
}
