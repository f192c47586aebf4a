//! Runs a small experiment from an inline config and prints the summary.

use lhs_attack::harness::{run_experiment, summary_to_csv, ExperimentConfig};

const CONFIG: &str = r#"
[experiment]
oracles = ["hypersphere:m=10,r=0.3", "halfspace:m=10,axis=2,b=-0.6"]
budgets = [500, 2000, 5000]
repetitions = 5
base_seed = 11

[attack]
initial_samples = 40
iterations = 30
"#;

fn main() -> anyhow::Result<()> {
    let config = ExperimentConfig::parse(CONFIG)?;
    let report = run_experiment(&config)?;
    println!("{} runs", report.runs.len());
    print!("{}", summary_to_csv(&report.summary));
    Ok(())
}
