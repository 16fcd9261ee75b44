//! Runs a small benchmark suite and writes bench.csv, summary.json and
//! the SVG charts.

use std::path::Path;

use clustinit::clustering::Algorithm;
use clustinit::datagen::{generate_suite, SuiteSpec};
use clustinit::detect::BlobDetector;
use clustinit::eval::{run_bench, write_outputs, BenchConfig};
use clustinit::indices::IndexKind;

fn main() -> clustinit::Result<()> {
    let spec = SuiteSpec {
        n_range: (3000, 8000),
        ..SuiteSpec::default()
    };
    let suite = generate_suite(12, 2024, &spec)?;
    let cfg = BenchConfig {
        algorithms: vec![Algorithm::KMeans, Algorithm::Rfcm],
        indices: vec![IndexKind::Bic, IndexKind::CalinskiHarabasz],
        seed: 2024,
        ..BenchConfig::default()
    };
    let records = run_bench(&suite, &BlobDetector::default(), &cfg)?;
    let out = Path::new("clustinit-out/examples/bench");
    let summary = write_outputs(out, &records, &cfg)?;
    println!("{}", serde_json::to_string_pretty(&summary.k_detection_rate).unwrap());
    println!("wrote {}", out.display());
    Ok(())
}
