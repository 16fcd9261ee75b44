//! Renders a dataset as a grayscale density frame and writes the matching
//! YOLO-format label file, the training corpus format for the model backend.

use std::path::Path;

use clustinit::datagen::GeneratorConfig;
use clustinit::prelude::*;
use clustinit::raster::write_labels;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ds = generate(&GeneratorConfig::blobs(4, 8000, 21).with_separation(8.0))?;
    let frame = rasterize(&ds, 640, 0.05)?;
    let labels = make_labels(&ds, &frame, 0.95)?;

    let out = Path::new("clustinit-out/examples/frames");
    std::fs::create_dir_all(out)?;
    frame.write_pgm(&out.join("blobs.pgm"))?;
    frame.write_sidecar(&out.join("blobs.json"))?;
    write_labels(&labels, &out.join("blobs.txt"))?;

    println!("{}x{} frame from {} points", frame.width(), frame.height(), ds.len());
    for label in &labels {
        println!("{}", label.to_line());
    }
    Ok(())
}
