//! Seeds each clustering algorithm with detected parameters and with a
//! random start, and compares accuracy and iteration counts.

use clustinit::clustering::{Algorithm, AlgorithmSettings};
use clustinit::prelude::*;

fn main() -> clustinit::Result<()> {
    let ds = generate(&GeneratorConfig::blobs(7, 15_000, 99).with_separation(5.0))?;
    let frame = rasterize(&ds, 640, 0.05)?;
    let init = boxes_to_init(&BlobDetector::default().detect(&frame)?, &frame).or_fallback(&ds.points);
    println!("detected k = {} (true {})", init.k, ds.k_true);

    let settings = AlgorithmSettings::default();
    for algo in Algorithm::ALL {
        let detected = algo.run(&ds.points, &InitSpec::Detected(init.clone()), &settings, 1)?;
        let random = algo.run(&ds.points, &InitSpec::Random { k: ds.k_true, seed: 1 }, &settings, 1)?;
        println!(
            "{algo:<7} detected: AR {:.4} in {:>3} iterations | random: AR {:.4} in {:>3} iterations",
            accuracy_rate(&ds.labels, &detected.assignments)?,
            detected.iterations,
            accuracy_rate(&ds.labels, &random.assignments)?,
            random.iterations,
        );
    }
    Ok(())
}
