//! Estimates k with every validity index and prints the sweep values.

use clustinit::clustering::KMeansClusterer;
use clustinit::prelude::*;

fn main() -> clustinit::Result<()> {
    let ds = generate(&GeneratorConfig::blobs(4, 1500, 12).with_separation(6.0))?;
    let clusterer = KMeansClusterer::default();
    println!("true k = {}", ds.k_true);
    for kind in IndexKind::ALL {
        let report = estimate_k(&ds.points, kind, 8, &clusterer, 3)?;
        let values: Vec<String> = report.values.iter().map(|(k, v)| format!("{k}:{v:.3}")).collect();
        println!(
            "{:<4} k = {} in {:.2} s  [{}]",
            kind.name(),
            report.k_selected,
            report.elapsed_seconds,
            values.join(" ")
        );
    }
    Ok(())
}
