//! Generates one dataset per shape family and writes them to disk.
//!
//! cargo run --example generate_datasets -- [out_dir]

use clustinit::datagen::{generate, write_dataset, GeneratorConfig, ShapeFamily};
use clustinit::seed::derive_seed;

fn main() -> clustinit::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "clustinit-out/examples/datasets".into());
    let families = [
        ShapeFamily::GaussianBlobs,
        ShapeFamily::VariedVarianceBlobs,
        ShapeFamily::Anisotropic,
        ShapeFamily::NoisyMoons,
        ShapeFamily::NoisyCircles,
        ShapeFamily::NoStructure,
    ];
    for (i, family) in families.into_iter().enumerate() {
        let cfg = GeneratorConfig::new(family, 5, 5000, derive_seed(7, i as u64)).with_noise(0.05);
        let ds = generate(&cfg)?;
        let dir = std::path::Path::new(&out).join(family.to_string());
        write_dataset(&ds, &dir)?;
        println!("{family:<22} k_true = {:>2}  sizes = {:?}  -> {}", ds.k_true, ds.cluster_sizes(), dir.display());
    }
    Ok(())
}
