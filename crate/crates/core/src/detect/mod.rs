//! Cluster-region detection on raster frames and conversion of the detected
//! boxes into initialization parameters.
//!
//! Two backends implement [`Detector`]: [`BlobDetector`], a deterministic
//! smoothing + connected-components pass, and (with the `onnx` feature)
//! [`ModelDetector`], which runs a serialized detection network.

mod blob;
#[cfg(feature = "onnx")]
mod model;
mod nms;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use blob::{density_blob_detect, gaussian_smooth};
#[cfg(feature = "onnx")]
pub use model::{model_detect, ModelArtifact, ModelDetector};
pub use nms::{iou, nms};

use crate::raster::RasterFrame;
use crate::{Error, Point, Result};

/// Axis-aligned box in frame pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
    pub confidence: f64,
}

impl DetectionBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64, confidence: f64) -> Self {
        DetectionBox {
            x_min,
            y_min,
            x_max,
            y_max,
            confidence,
        }
    }

    pub fn center(&self) -> Point {
        [0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max)]
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min).max(0.0) * (self.y_max - self.y_min).max(0.0)
    }

    pub fn contains(&self, px: Point) -> bool {
        px[0] >= self.x_min && px[0] <= self.x_max && px[1] >= self.y_min && px[1] <= self.y_max
    }

    /// Whether the box is non-empty and lies inside a `width x height` frame.
    pub fn is_valid_in(&self, width: usize, height: usize) -> bool {
        self.x_min < self.x_max
            && self.y_min < self.y_max
            && self.x_min >= 0.0
            && self.y_min >= 0.0
            && self.x_max <= width as f64
            && self.y_max <= height as f64
            && (0.0..=1.0).contains(&self.confidence)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorSettings {
    /// Model backend: raw predictions at or below this confidence are dropped.
    pub confidence_threshold: f64,
    pub nms_iou_threshold: f64,
    /// Blob backend: Gaussian smoothing radius in pixels (0 disables).
    pub smoothing_sigma_px: f64,
    /// Blob backend: binarization level as a fraction of the smoothed maximum.
    pub density_threshold_frac: f64,
    pub min_box_area_px: usize,
    /// Blob backend: components holding less than this fraction of the
    /// frame's points are dropped.
    pub min_mass_frac: f64,
}

impl Default for DetectorSettings {
    fn default() -> Self {
        DetectorSettings {
            confidence_threshold: 0.25,
            nms_iou_threshold: 0.45,
            smoothing_sigma_px: 3.0,
            density_threshold_frac: 0.08,
            min_box_area_px: 25,
            min_mass_frac: 0.01,
        }
    }
}

impl DetectorSettings {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(0.0..=1.0).contains(&self.confidence_threshold) {
            return bad("confidence_threshold must lie in [0, 1]");
        }
        if !(self.nms_iou_threshold > 0.0 && self.nms_iou_threshold < 1.0) {
            return bad("nms_iou_threshold must lie in (0, 1)");
        }
        if !(self.smoothing_sigma_px >= 0.0 && self.smoothing_sigma_px.is_finite()) {
            return bad("smoothing_sigma_px must be >= 0");
        }
        if !(self.density_threshold_frac > 0.0 && self.density_threshold_frac < 1.0) {
            return bad("density_threshold_frac must lie in (0, 1)");
        }
        if self.min_box_area_px == 0 {
            return bad("min_box_area_px must be positive");
        }
        if !(0.0..1.0).contains(&self.min_mass_frac) {
            return bad("min_mass_frac must lie in [0, 1)");
        }
        Ok(())
    }
}

/// A source of cluster boxes for a raster frame.
///
/// Implementations must be deterministic and callable from several threads.
pub trait Detector: Send + Sync {
    fn name(&self) -> &str;

    fn detect(&self, frame: &RasterFrame) -> Result<Vec<DetectionBox>>;
}

/// The classical smoothing + connected-components backend.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BlobDetector {
    pub settings: DetectorSettings,
}

impl BlobDetector {
    pub fn new(settings: DetectorSettings) -> Self {
        BlobDetector { settings }
    }
}

impl Detector for BlobDetector {
    fn name(&self) -> &str {
        "blob"
    }

    fn detect(&self, frame: &RasterFrame) -> Result<Vec<DetectionBox>> {
        density_blob_detect(frame, &self.settings)
    }
}

/// Estimated cluster count, data-space centroids and cluster sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitParams {
    pub k: usize,
    pub centroids: Vec<Point>,
    /// Estimated number of points per cluster.
    pub size_estimates: Vec<f64>,
    pub confidences: Vec<f64>,
}

impl InitParams {
    /// Replaces an empty detection with one cluster at the mean of `points`.
    pub fn or_fallback(self, points: &[Point]) -> InitParams {
        if self.k > 0 || points.is_empty() {
            return self;
        }
        let n = points.len() as f64;
        let mean = points
            .iter()
            .fold([0.0, 0.0], |acc, p| [acc[0] + p[0] / n, acc[1] + p[1] / n]);
        InitParams {
            k: 1,
            centroids: vec![mean],
            size_estimates: vec![n],
            confidences: vec![0.0],
        }
    }
}

/// Converts pixel-space boxes into data-space initialization parameters.
///
/// Each centroid is the box center mapped to data space; each size estimate
/// is the density mass of the pixels whose centers fall in the box, rescaled
/// to point counts.
pub fn boxes_to_init(boxes: &[DetectionBox], frame: &RasterFrame) -> InitParams {
    let grid_sum: f64 = frame.grid.iter().sum();
    let to_points = if grid_sum > 0.0 {
        frame.total_points as f64 / grid_sum
    } else {
        0.0
    };
    let (w, h) = (frame.width(), frame.height());
    let mut centroids = Vec::with_capacity(boxes.len());
    let mut size_estimates = Vec::with_capacity(boxes.len());
    for b in boxes {
        centroids.push(frame.map.to_data_space(b.center()));
        // Pixel col c has center c + 0.5; keep x_min <= c + 0.5 <= x_max.
        let c0 = (b.x_min - 0.5).ceil().max(0.0) as usize;
        let c1 = ((b.x_max - 0.5).floor() + 1.0).clamp(0.0, w as f64) as usize;
        let r0 = (b.y_min - 0.5).ceil().max(0.0) as usize;
        let r1 = ((b.y_max - 0.5).floor() + 1.0).clamp(0.0, h as f64) as usize;
        let mut mass = 0.0;
        for r in r0..r1 {
            mass += frame.grid[r * w + c0.min(c1)..r * w + c1].iter().sum::<f64>();
        }
        size_estimates.push(mass * to_points);
    }
    InitParams {
        k: boxes.len(),
        centroids,
        size_estimates,
        confidences: boxes.iter().map(|b| b.confidence).collect(),
    }
}

/// Serialized detection output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub k: usize,
    pub boxes: Vec<DetectionBox>,
    pub centroids_data_space: Vec<Point>,
    pub size_estimates: Vec<f64>,
}

impl DetectionReport {
    pub fn new(boxes: Vec<DetectionBox>, init: &InitParams) -> Self {
        DetectionReport {
            k: init.k,
            boxes,
            centroids_data_space: init.centroids.clone(),
            size_estimates: init.size_estimates.clone(),
        }
    }

    pub fn init_params(&self) -> InitParams {
        InitParams {
            k: self.k,
            centroids: self.centroids_data_space.clone(),
            size_estimates: self.size_estimates.clone(),
            confidences: self.boxes.iter().map(|b| b.confidence).collect(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("report serializes");
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let report: DetectionReport = serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?;
        let n = report.k;
        if report.centroids_data_space.len() != n || report.size_estimates.len() != n || report.boxes.len() != n {
            return Err(Error::parse(path, "k disagrees with the number of boxes/centroids/sizes"));
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate, GeneratorConfig};
    use crate::raster::{rasterize, rasterize_points, AffineMap};

    #[test]
    fn single_bin_box_maps_to_bin_center() {
        let mut grid = vec![0.0; 640 * 640];
        grid[320 * 640 + 320] = 1.0;
        let map = AffineMap {
            scale_x: 6.4,
            scale_y: 3.2,
            offset_x: 10.0,
            offset_y: -5.0,
            width: 640,
            height: 640,
        };
        let frame = RasterFrame::from_grid(grid, map, 17).unwrap();
        let b = DetectionBox::new(320.0, 320.0, 321.0, 321.0, 0.7);
        let init = boxes_to_init(&[b], &frame);
        assert_eq!(init.k, 1);
        assert_eq!(init.centroids[0], map.to_data_space([320.5, 320.5]));
        assert_eq!(init.size_estimates, vec![17.0]);
        assert_eq!(init.confidences, vec![0.7]);
    }

    #[test]
    fn empty_boxes_give_k_zero_and_fallback() {
        let frame = rasterize_points(&[[0.0, 0.0], [2.0, 4.0]], 32, 0.05).unwrap();
        let init = boxes_to_init(&[], &frame);
        assert_eq!(init.k, 0);
        let fb = init.or_fallback(&[[0.0, 0.0], [2.0, 4.0]]);
        assert_eq!(fb.k, 1);
        assert_eq!(fb.centroids, vec![[1.0, 2.0]]);
    }

    #[test]
    fn twin_blob_sizes_are_near_half() {
        let ds = generate(&GeneratorConfig::blobs(2, 20_000, 4).with_separation(10.0)).unwrap();
        let frame = rasterize(&ds, 640, 0.05).unwrap();
        let boxes = density_blob_detect(&frame, &DetectorSettings::default()).unwrap();
        let init = boxes_to_init(&boxes, &frame);
        assert_eq!(init.k, 2);
        // Count the points whose pixel centers fall inside each box.
        for (b, est) in boxes.iter().zip(&init.size_estimates) {
            let inside = ds
                .points
                .iter()
                .filter(|&&p| {
                    let (c, r) = frame.map.bin_of(p);
                    b.contains([c as f64 + 0.5, r as f64 + 0.5])
                })
                .count() as f64;
            assert!((est - inside).abs() < 1e-6 * inside, "{est} vs {inside}");
            assert!((est - 10_000.0).abs() < 500.0, "{est}");
        }
        assert!(init.size_estimates.iter().sum::<f64>() <= 1.05 * 20_000.0);
    }

    #[test]
    fn settings_validation() {
        assert!(DetectorSettings::default().validate().is_ok());
        let bad = DetectorSettings {
            nms_iou_threshold: 1.0,
            ..DetectorSettings::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn report_json_schema() {
        let frame = rasterize_points(&[[0.0, 0.0]], 8, 0.0).unwrap();
        let b = DetectionBox::new(1.0, 1.0, 3.0, 4.0, 0.5);
        let init = boxes_to_init(&[b], &frame);
        let report = DetectionReport::new(vec![b], &init);
        let v: serde_json::Value = serde_json::to_value(&report).unwrap();
        let obj = v.as_object().unwrap();
        let mut keys: Vec<&str> = obj.keys().map(|k| k.as_str()).collect();
        keys.sort_unstable();
        assert_eq!(keys, ["boxes", "centroids_data_space", "k", "size_estimates"]);
        let bx = obj["boxes"][0].as_object().unwrap();
        for key in ["x_min", "y_min", "x_max", "y_max", "confidence"] {
            assert!(bx.contains_key(key));
        }
        assert_eq!(report.init_params(), init);
    }
}
