//! Density images of 2D point sets and the box labels that go with them.
//!
//! A [`RasterFrame`] bins points into a square grid whose values are point
//! counts divided by the largest count, so the image lies in `[0, 1]`. The
//! [`AffineMap`] stored with it converts between data units and pixels.
//! Pixel `(col, row)` covers `[col, col + 1) x [row, row + 1)` in pixel space,
//! and pixel rows follow the data `y` axis without flipping.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datagen::{bounds, Dataset2D};
use crate::{Error, Point, Result};

pub const DEFAULT_RESOLUTION: usize = 640;
pub const DEFAULT_MARGIN: f64 = 0.05;
pub const DEFAULT_COVERAGE: f64 = 0.995;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    /// Pixels per data unit.
    pub scale_x: f64,
    pub scale_y: f64,
    /// Pixel coordinate of the data origin.
    pub offset_x: f64,
    pub offset_y: f64,
    pub width: usize,
    pub height: usize,
}

impl AffineMap {
    pub fn identity(width: usize, height: usize) -> Self {
        AffineMap {
            scale_x: 1.0,
            scale_y: 1.0,
            offset_x: 0.0,
            offset_y: 0.0,
            width,
            height,
        }
    }

    /// Map sending the data box `[lo, hi]` onto the full `width x height` image.
    pub fn fit(lo: Point, hi: Point, width: usize, height: usize) -> Self {
        let scale_x = width as f64 / (hi[0] - lo[0]);
        let scale_y = height as f64 / (hi[1] - lo[1]);
        AffineMap {
            scale_x,
            scale_y,
            offset_x: -lo[0] * scale_x,
            offset_y: -lo[1] * scale_y,
            width,
            height,
        }
    }

    pub fn to_pixel(&self, p: Point) -> Point {
        [p[0] * self.scale_x + self.offset_x, p[1] * self.scale_y + self.offset_y]
    }

    pub fn to_data_space(&self, px: Point) -> Point {
        [(px[0] - self.offset_x) / self.scale_x, (px[1] - self.offset_y) / self.scale_y]
    }

    /// Data-space size of one pixel along each axis.
    pub fn bin_size(&self) -> Point {
        [1.0 / self.scale_x, 1.0 / self.scale_y]
    }

    /// Pixel containing `p`, clamped into the image.
    pub fn bin_of(&self, p: Point) -> (usize, usize) {
        let q = self.to_pixel(p);
        let clamp = |v: f64, n: usize| (v.floor().max(0.0) as usize).min(n - 1);
        (clamp(q[0], self.width), clamp(q[1], self.height))
    }
}

/// Inverse of the rasterization transform.
pub fn to_data_space(px: Point, map: &AffineMap) -> Point {
    map.to_data_space(px)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterFrame {
    /// Row-major `height x width` normalized densities.
    pub grid: Vec<f64>,
    pub map: AffineMap,
    pub total_points: usize,
    /// Largest bin count before normalization.
    pub max_count: u32,
}

impl RasterFrame {
    pub fn width(&self) -> usize {
        self.map.width
    }

    pub fn height(&self) -> usize {
        self.map.height
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.grid[row * self.map.width + col]
    }

    /// Bin counts recovered from the normalized grid.
    pub fn counts(&self) -> Vec<u32> {
        self.grid
            .iter()
            .map(|&v| (v * self.max_count as f64).round() as u32)
            .collect()
    }

    /// Builds a frame from a density image with values in `[0, 1]`, e.g. read
    /// back from a PGM file.
    pub fn from_grid(grid: Vec<f64>, map: AffineMap, total_points: usize) -> Result<Self> {
        if grid.len() != map.width * map.height {
            return Err(Error::LengthMismatch(grid.len(), map.width * map.height));
        }
        if grid.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidInput("grid values must lie in [0, 1]".into()));
        }
        Ok(RasterFrame {
            grid,
            map,
            total_points,
            max_count: 0,
        })
    }

    /// 8-bit grayscale pixels, `round(255 * density)`.
    pub fn to_gray8(&self) -> Vec<u8> {
        self.grid.iter().map(|&v| (255.0 * v).round() as u8).collect()
    }

    /// Writes the frame as a binary PGM (P5) image.
    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let mut bytes = format!("P5\n{} {}\n255\n", self.width(), self.height()).into_bytes();
        bytes.extend(self.to_gray8());
        fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    /// Writes the affine map and point count next to an exported image.
    pub fn write_sidecar(&self, path: &Path) -> Result<()> {
        let side = Sidecar {
            map: self.map,
            total_points: self.total_points,
        };
        let json = serde_json::to_string_pretty(&side).expect("sidecar serializes");
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    /// Reads a PGM image plus the sidecar written by [`Self::write_sidecar`].
    pub fn read_pgm(image: &Path, sidecar: &Path) -> Result<Self> {
        let (width, height, pixels) = read_pgm(image)?;
        let text = fs::read_to_string(sidecar).map_err(|e| Error::io(sidecar, e))?;
        let side: Sidecar = serde_json::from_str(&text).map_err(|e| Error::parse(sidecar, e))?;
        if side.map.width != width || side.map.height != height {
            return Err(Error::parse(sidecar, "map size differs from the image size"));
        }
        let grid = pixels.iter().map(|&b| b as f64 / 255.0).collect();
        RasterFrame::from_grid(grid, side.map, side.total_points)
    }
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    map: AffineMap,
    total_points: usize,
}

/// Parses a binary 8-bit PGM file into `(width, height, pixels)`.
pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |m: &str| Error::parse(path, m);
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated PGM header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if fields[0] != "P5" {
        return Err(bad("not a binary PGM (P5) file"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad PGM header number"));
    let (width, height, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
    if maxval != 255 {
        return Err(bad("only 8-bit PGM is supported"));
    }
    let data = &bytes[pos + 1..];
    if data.len() < width * height {
        return Err(bad("truncated PGM pixel data"));
    }
    Ok((width, height, data[..width * height].to_vec()))
}

/// Rasterizes a dataset; see [`rasterize_points`].
pub fn rasterize(ds: &Dataset2D, resolution: usize, margin_frac: f64) -> Result<RasterFrame> {
    rasterize_points(&ds.points, resolution, margin_frac)
}

/// Bins `points` into a `resolution x resolution` density grid.
///
/// The data bounding box grows by `margin_frac` of its extent on each side,
/// and each axis is scaled independently to fill the square. An axis with
/// zero extent is widened to one data unit centered on the points.
pub fn rasterize_points(points: &[Point], resolution: usize, margin_frac: f64) -> Result<RasterFrame> {
    if points.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if resolution == 0 {
        return Err(Error::InvalidInput("resolution must be positive".into()));
    }
    if !(margin_frac >= 0.0 && margin_frac.is_finite()) {
        return Err(Error::InvalidInput("margin_frac must be >= 0".into()));
    }
    let (mut lo, mut hi) = bounds(points);
    for d in 0..2 {
        let extent = hi[d] - lo[d];
        if extent > 0.0 {
            lo[d] -= margin_frac * extent;
            hi[d] += margin_frac * extent;
        } else {
            lo[d] -= 0.5;
            hi[d] += 0.5;
        }
    }
    let map = AffineMap::fit(lo, hi, resolution, resolution);
    let mut counts = vec![0u32; resolution * resolution];
    for &p in points {
        let (c, r) = map.bin_of(p);
        counts[r * resolution + c] += 1;
    }
    let max_count = counts.iter().copied().max().unwrap_or(0);
    let grid = counts.iter().map(|&c| c as f64 / max_count as f64).collect();
    Ok(RasterFrame {
        grid,
        map,
        total_points: points.len(),
        max_count,
    })
}

/// One box in the normalized `class cx cy w h` label convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxLabel {
    pub class_id: u32,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl BoxLabel {
    pub fn to_line(&self) -> String {
        format!("{} {:.6} {:.6} {:.6} {:.6}", self.class_id, self.cx, self.cy, self.w, self.h)
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

/// Interval `[lo, hi]` clamped to `[0, size]`, at least one pixel wide.
fn pixel_extent(lo: f64, hi: f64, size: usize) -> (f64, f64) {
    let size = size as f64;
    let (mut lo, mut hi) = (lo.clamp(0.0, size), hi.clamp(0.0, size));
    if hi - lo < 1.0 {
        let mid = 0.5 * (lo + hi);
        lo = (mid - 0.5).clamp(0.0, size - 1.0);
        hi = lo + 1.0;
    }
    (lo, hi)
}

/// One box per true cluster spanning the per-axis
/// `[1 - coverage_quantile, coverage_quantile]` range of its points.
pub fn make_labels(ds: &Dataset2D, frame: &RasterFrame, coverage_quantile: f64) -> Result<Vec<BoxLabel>> {
    if !(0.5..=1.0).contains(&coverage_quantile) {
        return Err(Error::InvalidInput("coverage_quantile must lie in [0.5, 1]".into()));
    }
    let map = &frame.map;
    let mut xs = vec![Vec::new(); ds.k_true];
    let mut ys = vec![Vec::new(); ds.k_true];
    for (&p, &l) in ds.points.iter().zip(&ds.labels) {
        let q = map.to_pixel(p);
        xs[l].push(q[0]);
        ys[l].push(q[1]);
    }
    let (w, h) = (map.width as f64, map.height as f64);
    let mut labels = Vec::with_capacity(ds.k_true);
    for (mut cx, mut cy) in xs.into_iter().zip(ys) {
        if cx.is_empty() {
            continue;
        }
        cx.sort_by(f64::total_cmp);
        cy.sort_by(f64::total_cmp);
        let (x0, x1, y0, y1) = if cx.len() < 2 {
            (cx[0], cx[0], cy[0], cy[0])
        } else {
            (
                quantile_sorted(&cx, 1.0 - coverage_quantile),
                quantile_sorted(&cx, coverage_quantile),
                quantile_sorted(&cy, 1.0 - coverage_quantile),
                quantile_sorted(&cy, coverage_quantile),
            )
        };
        let (x0, x1) = pixel_extent(x0, x1, map.width);
        let (y0, y1) = pixel_extent(y0, y1, map.height);
        labels.push(BoxLabel {
            class_id: 0,
            cx: 0.5 * (x0 + x1) / w,
            cy: 0.5 * (y0 + y1) / h,
            w: (x1 - x0) / w,
            h: (y1 - y0) / h,
        });
    }
    Ok(labels)
}

/// Writes labels one per line, `class_id cx cy w h` with six decimals.
pub fn write_labels(labels: &[BoxLabel], path: &Path) -> Result<()> {
    let mut out = Vec::new();
    for l in labels {
        writeln!(out, "{}", l.to_line()).expect("writing to a Vec");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_labels(path: &Path) -> Result<Vec<BoxLabel>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 5 {
                return Err(Error::parse(path, format!("expected 5 fields, got {line:?}")));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| Error::parse(path, e));
            Ok(BoxLabel {
                class_id: f[0].parse().map_err(|e| Error::parse(path, e))?,
                cx: num(f[1])?,
                cy: num(f[2])?,
                w: num(f[3])?,
                h: num(f[4])?,
            })
        })
        .collect()
}
