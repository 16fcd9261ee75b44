//! Loads a trained detection network (ONNX) and runs it on a frame.
//!
//! cargo run --example model_detect -- path/to/detector.onnx [confidence]

use clustinit::detect::{ModelArtifact, ModelDetector};
use clustinit::prelude::*;

fn main() -> clustinit::Result<()> {
    let mut args = std::env::args().skip(1);
    let Some(path) = args.next() else {
        eprintln!("usage: model_detect <model.onnx> [confidence]");
        std::process::exit(1);
    };
    let confidence = args.next().map(|c| c.parse().expect("confidence is a number")).unwrap_or(0.25);

    let artifact = ModelArtifact::load(path.as_ref())?;
    println!("model input {:?}", artifact.input_shape());
    let detector = ModelDetector::new(
        artifact,
        DetectorSettings {
            confidence_threshold: confidence,
            ..DetectorSettings::default()
        },
    );

    let ds = generate(&GeneratorConfig::blobs(5, 10_000, 3).with_separation(8.0))?;
    let frame = rasterize(&ds, 640, 0.05)?;
    let boxes = detector.detect(&frame)?;
    let init = boxes_to_init(&boxes, &frame);
    println!("{} boxes, k = {} (true {})", boxes.len(), init.k, ds.k_true);
    Ok(())
}
