//! Runs the deterministic blob backend on a frame and prints the boxes
//! and the initialization parameters derived from them.

use clustinit::prelude::*;

fn main() -> clustinit::Result<()> {
    let ds = generate(&GeneratorConfig::blobs(6, 20_000, 5).with_separation(8.0))?;
    let frame = rasterize(&ds, 640, 0.05)?;
    let detector = BlobDetector::new(DetectorSettings {
        smoothing_sigma_px: 2.5,
        ..DetectorSettings::default()
    });
    let boxes = detector.detect(&frame)?;
    for b in &boxes {
        println!(
            "box ({:6.1}, {:6.1})-({:6.1}, {:6.1}) confidence {:.3}",
            b.x_min, b.y_min, b.x_max, b.y_max, b.confidence
        );
    }
    let init = boxes_to_init(&boxes, &frame);
    println!("k = {} (true {})", init.k, ds.k_true);
    let report = match_centroids(&ds.centroids_true, &init.centroids);
    println!(
        "mean centroid error {:.3} ({:.2}% of the diagonal)",
        report.mean_distance,
        100.0 * report.mean_distance / ds.diagonal()
    );
    println!("size estimates {:?}", init.size_estimates);
    Ok(())
}
