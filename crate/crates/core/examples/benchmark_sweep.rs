//! A small planner sweep printed as CSV plus the per-planner summary.

use dc2g::eval::benchmark::{run_benchmark, BenchmarkConfig, BenchmarkReport};

pub fn run(worlds: usize) -> anyhow::Result<BenchmarkReport> {
    let config = BenchmarkConfig {
        worlds,
        starts_per_world: 2,
        seed: 11,
        ..Default::default()
    };
    let report = run_benchmark(&config, None)?;
    print!("{}", report.csv_string());
    println!("{}", report.summary_json());
    Ok(report)
}

fn main() -> anyhow::Result<()> {
    run(5).map(|_| ())
}
