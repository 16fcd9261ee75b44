//! Compares how index sweeps and the detection stage scale with n.

use clustinit::detect::BlobDetector;
use clustinit::eval::{time_scaling_experiment, TimingConfig};
use clustinit::indices::IndexKind;

fn main() -> clustinit::Result<()> {
    let rows = time_scaling_experiment(
        &[5_000, 10_000, 20_000],
        6,
        &[IndexKind::Bic, IndexKind::CalinskiHarabasz],
        &BlobDetector::default(),
        &TimingConfig::default(),
    )?;
    println!("{:>7} {:>12} {:>12} {:>12}", "n", "detect ms", "pipeline ms", "sweep ms");
    for r in &rows {
        println!(
            "{:>7} {:>12.2} {:>12.2} {:>12.2}",
            r.n,
            r.time_detect_stage_s * 1e3,
            r.time_pipeline_s * 1e3,
            r.total_index_sweep_s() * 1e3
        );
    }
    Ok(())
}
