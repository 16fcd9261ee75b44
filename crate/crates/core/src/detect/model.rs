//! Inference backend for serialized (ONNX) detection networks.
//!
//! The network must take one `f32` image tensor of fixed shape
//! `[1, C, H, W]` with values in `[0, 1]`. Two output layouts are decoded:
//! rows of `[cx, cy, w, h, objectness, class scores...]` shaped
//! `[1, N, 5 + classes]`, and the anchor-free transposed layout
//! `[1, 4 + classes, N]` without objectness. A `[1, N, 5 + classes]` tensor
//! is told apart from a transposed one by its last axis being the shorter.
//! Box coordinates are in model input pixels.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use tract_onnx::prelude::*;

use super::{nms, DetectionBox, Detector, DetectorSettings};
use crate::raster::RasterFrame;
use crate::{Error, Result};

type Plan = Arc<TypedRunnableModel>;

/// A loaded, immutable detection network.
#[derive(Clone)]
pub struct ModelArtifact {
    plan: Plan,
    input_shape: [usize; 4],
    source: Option<PathBuf>,
}

impl std::fmt::Debug for ModelArtifact {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelArtifact")
            .field("input_shape", &self.input_shape)
            .field("source", &self.source)
            .finish()
    }
}

fn bad(reason: impl std::fmt::Display) -> Error {
    Error::BadModelArtifact {
        reason: reason.to_string(),
    }
}

impl ModelArtifact {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        let mut artifact = Self::from_bytes(&bytes)?;
        artifact.source = Some(path.to_path_buf());
        Ok(artifact)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let model = tract_onnx::onnx()
            .model_for_read(&mut &bytes[..])
            .map_err(|e| bad(format!("cannot parse network: {e}")))?;
        let inputs = model.input_outlets().map_err(bad)?.len();
        if inputs != 1 {
            return Err(bad(format!("network has {inputs} inputs")));
        }
        let fact = model.input_fact(0).map_err(bad)?;
        let dims = fact
            .shape
            .as_concrete_finite()
            .ok()
            .flatten()
            .ok_or_else(|| bad("input shape is not fully declared"))?;
        let input_shape: [usize; 4] = dims
            .as_slice()
            .try_into()
            .map_err(|_| bad(format!("input has rank {}", dims.len())))?;
        if input_shape[0] != 1 || input_shape[1] == 0 || input_shape[2] == 0 || input_shape[3] == 0 {
            return Err(bad(format!("input shape {input_shape:?}")));
        }
        let model = model
            .with_input_fact(0, f32::fact(input_shape).into())
            .and_then(|m| m.into_optimized())
            .and_then(|m| m.into_runnable())
            .map_err(|e| bad(format!("cannot prepare network: {e}")))?;
        Ok(ModelArtifact {
            plan: model,
            input_shape,
            source: None,
        })
    }

    /// Declared input shape `[1, C, H, W]`.
    pub fn input_shape(&self) -> [usize; 4] {
        self.input_shape
    }

    /// Raw `(cx, cy, w, h, confidence)` predictions in model input pixels.
    fn predict(&self, frame: &RasterFrame) -> Result<Vec<[f64; 5]>> {
        let [_, channels, mh, mw] = self.input_shape;
        let plane = resize_bilinear(&frame.grid, frame.width(), frame.height(), mw, mh);
        let mut data = Vec::with_capacity(channels * plane.len());
        for _ in 0..channels {
            data.extend(plane.iter().map(|&v| v as f32));
        }
        let input = Tensor::from_shape(&self.input_shape, &data).map_err(bad)?;
        let outputs = self
            .plan
            .run(tvec!(input.into()))
            .map_err(|e| bad(format!("inference failed: {e}")))?;
        let out = outputs[0].to_plain_array_view::<f32>().map_err(bad)?;
        let shape = out.shape().to_vec();
        let (rows, cols, transposed) = match shape.as_slice() {
            // Transposed when the field axis comes first: it is the shorter
            // one and long enough to hold a box plus a score.
            [1, a, b] if a < b && *a >= 5 => (*b, *a, true),
            [1, a, b] => (*a, *b, false),
            [a, b] if a >= b => (*a, *b, false),
            other => return Err(bad(format!("unsupported output shape {other:?}"))),
        };
        let flat: Vec<f32> = out.iter().copied().collect();
        let at = |r: usize, c: usize| {
            if transposed {
                flat[c * rows + r] as f64
            } else {
                flat[r * cols + c] as f64
            }
        };
        if cols < 5 {
            return Err(bad(format!("output shape {shape:?} has too few box fields")));
        }
        let mut preds = Vec::with_capacity(rows);
        for r in 0..rows {
            let conf = if transposed {
                (4..cols).map(|c| at(r, c)).fold(f64::NEG_INFINITY, f64::max)
            } else {
                let obj = at(r, 4);
                let cls = (5..cols).map(|c| at(r, c)).fold(f64::NEG_INFINITY, f64::max);
                if cols > 5 {
                    obj * cls
                } else {
                    obj
                }
            };
            preds.push([at(r, 0), at(r, 1), at(r, 2), at(r, 3), conf]);
        }
        Ok(preds)
    }
}

/// Bilinear resampling with pixel-center alignment.
fn resize_bilinear(src: &[f64], sw: usize, sh: usize, dw: usize, dh: usize) -> Vec<f64> {
    if sw == dw && sh == dh {
        return src.to_vec();
    }
    let mut out = Vec::with_capacity(dw * dh);
    let sx = sw as f64 / dw as f64;
    let sy = sh as f64 / dh as f64;
    for r in 0..dh {
        let y = ((r as f64 + 0.5) * sy - 0.5).clamp(0.0, (sh - 1) as f64);
        let y0 = y.floor() as usize;
        let y1 = (y0 + 1).min(sh - 1);
        let fy = y - y0 as f64;
        for c in 0..dw {
            let x = ((c as f64 + 0.5) * sx - 0.5).clamp(0.0, (sw - 1) as f64);
            let x0 = x.floor() as usize;
            let x1 = (x0 + 1).min(sw - 1);
            let fx = x - x0 as f64;
            let top = src[y0 * sw + x0] * (1.0 - fx) + src[y0 * sw + x1] * fx;
            let bottom = src[y1 * sw + x0] * (1.0 - fx) + src[y1 * sw + x1] * fx;
            out.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    out
}

/// Runs the network on `frame` and returns suppressed boxes in frame pixels.
pub fn model_detect(frame: &RasterFrame, model: &ModelArtifact, settings: &DetectorSettings) -> Result<Vec<DetectionBox>> {
    settings.validate()?;
    let [_, _, mh, mw] = model.input_shape;
    let kx = frame.width() as f64 / mw as f64;
    let ky = frame.height() as f64 / mh as f64;
    let (fw, fh) = (frame.width() as f64, frame.height() as f64);
    let boxes: Vec<DetectionBox> = model
        .predict(frame)?
        .into_iter()
        .filter(|p| p[4].is_finite() && p[4] > settings.confidence_threshold)
        .filter_map(|[cx, cy, w, h, conf]| {
            let b = DetectionBox::new(
                ((cx - 0.5 * w) * kx).clamp(0.0, fw),
                ((cy - 0.5 * h) * ky).clamp(0.0, fh),
                ((cx + 0.5 * w) * kx).clamp(0.0, fw),
                ((cy + 0.5 * h) * ky).clamp(0.0, fh),
                conf.min(1.0),
            );
            (b.x_min < b.x_max && b.y_min < b.y_max).then_some(b)
        })
        .collect();
    Ok(nms(&boxes, settings.nms_iou_threshold))
}

/// Detector backed by a [`ModelArtifact`].
#[derive(Debug, Clone)]
pub struct ModelDetector {
    pub artifact: ModelArtifact,
    pub settings: DetectorSettings,
}

impl ModelDetector {
    pub fn new(artifact: ModelArtifact, settings: DetectorSettings) -> Self {
        ModelDetector { artifact, settings }
    }
}

impl Detector for ModelDetector {
    fn name(&self) -> &str {
        "model"
    }

    fn detect(&self, frame: &RasterFrame) -> Result<Vec<DetectionBox>> {
        model_detect(frame, &self.artifact, &self.settings)
    }
}
