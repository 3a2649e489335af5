//! Trains every stage and baseline, then prints the comparison table.
//! Takes a few minutes at the default size.
//!
//! cargo run --release --example benchmark -- 1500

use resim::eval::{run_benchmark, BenchmarkConfig, Method};
use resim::pipeline::{train_pipeline, ModelDir, PipelineConfig};
use resim::scenegen::{generate_records, partition, DatasetConfig};

fn main() -> resim::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1500);
    let [train, val, test] = partition(generate_records(&DatasetConfig { n, ..DatasetConfig::default() })?);
    let models = train_pipeline(&train, &val, &PipelineConfig::desk(), None)?;
    let report = run_benchmark(&train, &test, &ModelDir::from_models(&models), &BenchmarkConfig::default())?;
    print!("{}", report.to_table());
    for c in report.check_orderings() {
        println!("{:5} {}", c.holds, c.description);
    }
    if let Some(f) = report.fraction_better(Method::Ours, Method::DepthFwdS) {
        println!("Ours beats Depth+fwdS on {:.0}% of records", 100.0 * f);
    }
    Ok(())
}
