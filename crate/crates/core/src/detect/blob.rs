use super::{nms, DetectionBox, DetectorSettings};
use crate::raster::RasterFrame;
use crate::Result;

/// Normalized 1D Gaussian kernel truncated at three standard deviations.
fn kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i as f64).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Separable Gaussian blur of a row-major `width x height` image, treating
/// everything outside the image as zero.
pub fn gaussian_smooth(grid: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return grid.to_vec();
    }
    let k = kernel(sigma);
    let r = (k.len() / 2) as isize;
    let mut tmp = vec![0.0; grid.len()];
    for row in 0..height {
        let src = &grid[row * width..(row + 1) * width];
        let dst = &mut tmp[row * width..(row + 1) * width];
        for (c, &v) in src.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let lo = (c as isize - r).max(0);
            let hi = (c as isize + r).min(width as isize - 1);
            for t in lo..=hi {
                dst[t as usize] += v * k[(t - c as isize + r) as usize];
            }
        }
    }
    let mut out = vec![0.0; grid.len()];
    for row in 0..height {
        let lo = (row as isize - r).max(0);
        let hi = (row as isize + r).min(height as isize - 1);
        for t in lo..=hi {
            let w = k[(t - row as isize + r) as usize];
            let src = &tmp[row * width..(row + 1) * width];
            let dst = &mut out[t as usize * width..(t as usize + 1) * width];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += w * s;
            }
        }
    }
    out
}

struct Component {
    col_min: usize,
    col_max: usize,
    row_min: usize,
    row_max: usize,
    density_sum: f64,
    mass: f64,
    pixels: usize,
}

/// 8-connected components of the `mask` pixels, in raster-scan order of
/// their first pixel.
fn components(mask: &[bool], smoothed: &[f64], raw: &[f64], width: usize, height: usize) -> Vec<Component> {
    let mut seen = vec![false; mask.len()];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut comp = Component {
            col_min: usize::MAX,
            col_max: 0,
            row_min: usize::MAX,
            row_max: 0,
            density_sum: 0.0,
            mass: 0.0,
            pixels: 0,
        };
        while let Some(idx) = stack.pop() {
            let (row, col) = (idx / width, idx % width);
            comp.col_min = comp.col_min.min(col);
            comp.col_max = comp.col_max.max(col);
            comp.row_min = comp.row_min.min(row);
            comp.row_max = comp.row_max.max(row);
            comp.density_sum += smoothed[idx];
            comp.mass += raw[idx];
            comp.pixels += 1;
            for dr in -1isize..=1 {
                for dc in -1isize..=1 {
                    let (nr, nc) = (row as isize + dr, col as isize + dc);
                    if nr < 0 || nc < 0 || nr >= height as isize || nc >= width as isize {
                        continue;
                    }
                    let n = nr as usize * width + nc as usize;
                    if mask[n] && !seen[n] {
                        seen[n] = true;
                        stack.push(n);
                    }
                }
            }
        }
        out.push(comp);
    }
    out
}

/// Finds cluster regions as connected high-density areas of the frame.
///
/// The grid is blurred with a Gaussian of `smoothing_sigma_px`, binarized at
/// `density_threshold_frac` of the blurred maximum and split into
/// boxes smaller than `min_box_area_px` are dropped, and the rest go through
/// [`nms`]. A box's confidence is its component's mean blurred density over
/// the blurred maximum.
pub fn density_blob_detect(frame: &RasterFrame, settings: &DetectorSettings) -> Result<Vec<DetectionBox>> {
    settings.validate()?;
    let (w, h) = (frame.width(), frame.height());
    let smoothed = gaussian_smooth(&frame.grid, w, h, settings.smoothing_sigma_px);
    let peak = smoothed.iter().copied().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Ok(Vec::new());
    }
    let level = settings.density_threshold_frac * peak;
    let mask: Vec<bool> = smoothed.iter().map(|&v| v >= level).collect();
    let total: f64 = frame.grid.iter().sum();
    let boxes: Vec<DetectionBox> = components(&mask, &smoothed, &frame.grid, w, h)
        .into_iter()
        .filter(|c| c.mass >= settings.min_mass_frac * total)
        .map(|c| {
            DetectionBox::new(
                c.col_min as f64,
                c.row_min as f64,
                (c.col_max + 1) as f64,
                (c.row_max + 1) as f64,
                (c.density_sum / c.pixels as f64 / peak).min(1.0),
            )
        })
        .filter(|b| b.area() >= settings.min_box_area_px as f64)
        .collect();
    Ok(nms(&boxes, settings.nms_iou_threshold))
}
