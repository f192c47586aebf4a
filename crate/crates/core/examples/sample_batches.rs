//! Draws LHS and SRS batches of the same shape and compares how evenly
//! they cover the standard normal.

use lhs_attack::sampler::{batch_discrepancy, lhs_normal, mean_abs_coordinate_mean, srs_normal};
use lhs_attack::SeedStream;

fn main() -> anyhow::Result<()> {
    let (count, dim) = (100, 50);
    println!("{:>5} {:>12} {:>12} {:>12} {:>12}", "seed", "lhs |mean|", "srs |mean|", "lhs KS", "srs KS");
    for seed in 0..5 {
        let stream = SeedStream::new(seed);
        let lhs = lhs_normal(count, dim, stream)?;
        let srs = srs_normal(count, dim, stream)?;
        println!(
            "{seed:>5} {:>12.5} {:>12.5} {:>12.5} {:>12.5}",
            mean_abs_coordinate_mean(&lhs),
            mean_abs_coordinate_mean(&srs),
            batch_discrepancy(&lhs)?,
            batch_discrepancy(&srs)?,
        );
    }

    // Each of the four strata per dimension holds exactly one sample.
    let small = lhs_normal(4, 2, SeedStream::new(1))?;
    for (i, row) in small.rows().enumerate() {
        println!("row {i}: {row:+.3?} strata {:?}", (0..2).map(|j| small.stratum(i, j).unwrap()).collect::<Vec<_>>());
    }
    Ok(())
}
