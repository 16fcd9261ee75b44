//! Cluster initialization from rasterized 2D data.
//!
//! The pipeline turns a set of 2D points into a normalized density image,
//! finds cluster regions in that image with a pluggable [`detect::Detector`],
//! and converts the regions into [`detect::InitParams`]: a cluster count,
//! data-space centroids and per-cluster size estimates. Those parameters seed
//! the partitional algorithms in [`clustering`], and [`eval`] compares the
//! whole approach against the classical index sweep in [`indices`].
//!
//! ```
//! use clustinit::prelude::*;
//!
//! let cfg = GeneratorConfig::blobs(3, 3000, 11).with_separation(10.0);
//! let ds = generate(&cfg).unwrap();
//! let frame = rasterize(&ds, 640, 0.05).unwrap();
//! let boxes = BlobDetector::default().detect(&frame).unwrap();
//! let init = boxes_to_init(&boxes, &frame);
//! assert_eq!(init.k, 3);
//! let fit = kmeans(&ds.points, &InitSpec::Detected(init), 300, 1e-6).unwrap();
//! assert!(accuracy_rate(&ds.labels, &fit.assignments).unwrap() > 0.99);
//! ```

pub mod cli;
pub mod clustering;
pub mod datagen;
pub mod detect;
mod error;
pub mod eval;
pub mod indices;
pub mod raster;
pub mod seed;

pub use error::{Error, Result};

/// A point in the data plane.
pub type Point = [f64; 2];

pub mod prelude {
    pub use crate::clustering::{gmm_em, kmeans, rfcm, xmeans, ClusteringResult, InitSpec};
    pub use crate::datagen::{generate, generate_suite, Dataset2D, GeneratorConfig, ShapeFamily};
    pub use crate::detect::{
        boxes_to_init, nms, BlobDetector, DetectionBox, Detector, DetectorSettings, InitParams,
    };
    pub use crate::eval::{accuracy_rate, euclidean, match_centroids};
    pub use crate::indices::{estimate_k, score, IndexKind};
    pub use crate::raster::{make_labels, rasterize, RasterFrame};
    pub use crate::{Error, Point, Result};
}
