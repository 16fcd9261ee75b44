//! Seeded synthetic 2D cluster datasets.
//!
//! Six shape families are available: isotropic blobs with a shared or a
//! per-cluster spread, anisotropic (linearly sheared) blobs, two interleaved
//! moons, two concentric circles and structureless uniform noise. Every
//! dataset carries its labels, its ground-truth centroids and the exact
//! configuration that produced it.

use std::f64::consts::PI;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::seed::{derive_seed, rng};
use crate::{Error, Point, Result};

/// Side of the square that blob centers are drawn from.
pub const CENTER_BOX: f64 = 100.0;

/// Candidate center draws allowed before giving up on `separation_min`.
pub const MAX_CENTER_ATTEMPTS: usize = 10_000;

const CIRCLE_RADIUS_RATIO: f64 = 0.5;
const MOON_SCALE: f64 = 30.0;
const CIRCLE_SCALE: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShapeFamily {
    GaussianBlobs,
    VariedVarianceBlobs,
    Anisotropic,
    NoisyMoons,
    NoisyCircles,
    NoStructure,
}

impl ShapeFamily {
    pub const ALL: [ShapeFamily; 6] = [
        ShapeFamily::GaussianBlobs,
        ShapeFamily::VariedVarianceBlobs,
        ShapeFamily::Anisotropic,
        ShapeFamily::NoisyMoons,
        ShapeFamily::NoisyCircles,
        ShapeFamily::NoStructure,
    ];

    /// Cluster count the family always produces, if it ignores `k`.
    pub fn fixed_k(self) -> Option<usize> {
        match self {
            ShapeFamily::NoisyMoons | ShapeFamily::NoisyCircles => Some(2),
            ShapeFamily::NoStructure => Some(1),
            _ => None,
        }
    }

    /// Whether the clusters are convex Gaussian-like blobs.
    pub fn is_blob(self) -> bool {
        self.fixed_k().is_none()
    }
}

impl std::fmt::Display for ShapeFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(match self {
            ShapeFamily::GaussianBlobs => "gaussian_blobs",
            ShapeFamily::VariedVarianceBlobs => "varied_variance_blobs",
            ShapeFamily::Anisotropic => "anisotropic",
            ShapeFamily::NoisyMoons => "noisy_moons",
            ShapeFamily::NoisyCircles => "noisy_circles",
            ShapeFamily::NoStructure => "no_structure",
        })
    }
}

impl std::str::FromStr for ShapeFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match norm.as_str() {
            "gaussianblobs" | "blobs" => ShapeFamily::GaussianBlobs,
            "variedvarianceblobs" | "varied" => ShapeFamily::VariedVarianceBlobs,
            "anisotropic" | "aniso" => ShapeFamily::Anisotropic,
            "noisymoons" | "moons" => ShapeFamily::NoisyMoons,
            "noisycircles" | "circles" => ShapeFamily::NoisyCircles,
            "nostructure" | "uniform" => ShapeFamily::NoStructure,
            _ => return Err(Error::InvalidConfig(format!("unknown shape family {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Balance {
    Equal,
    RandomProportions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub shape_family: ShapeFamily,
    pub k: usize,
    pub n_total: usize,
    /// Bounds on the per-cluster standard deviation, in data units.
    pub variance_range: (f64, f64),
    /// Minimum center distance in units of the larger of the two spreads.
    pub separation_min: f64,
    pub balance: Balance,
    pub noise_level: f64,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn new(shape_family: ShapeFamily, k: usize, n_total: usize, seed: u64) -> Self {
        GeneratorConfig {
            shape_family,
            k,
            n_total,
            variance_range: (1.0, 2.0),
            separation_min: 6.0,
            balance: Balance::Equal,
            noise_level: 0.05,
            seed,
        }
    }

    pub fn blobs(k: usize, n_total: usize, seed: u64) -> Self {
        Self::new(ShapeFamily::GaussianBlobs, k, n_total, seed)
    }

    pub fn with_separation(mut self, separation_min: f64) -> Self {
        self.separation_min = separation_min;
        self
    }

    pub fn with_variance_range(mut self, low: f64, high: f64) -> Self {
        self.variance_range = (low, high);
        self
    }

    pub fn with_balance(mut self, balance: Balance) -> Self {
        self.balance = balance;
        self
    }

    pub fn with_noise(mut self, noise_level: f64) -> Self {
        self.noise_level = noise_level;
        self
    }

    /// Number of clusters the configuration actually produces.
    pub fn effective_k(&self) -> usize {
        self.shape_family.fixed_k().unwrap_or(self.k)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.effective_k();
        if self.k < 1 || k < 1 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if self.n_total < k {
            return Err(Error::InvalidConfig(format!(
                "n_total = {} is smaller than k = {k}",
                self.n_total
            )));
        }
        let (lo, hi) = self.variance_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "variance_range ({lo}, {hi}) must satisfy 0 < low <= high"
            )));
        }
        if !(self.separation_min >= 0.0 && self.separation_min.is_finite()) {
            return Err(Error::InvalidConfig("separation_min must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.noise_level) {
            return Err(Error::InvalidConfig("noise_level must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset2D {
    pub points: Vec<Point>,
    pub labels: Vec<usize>,
    pub centroids_true: Vec<Point>,
    pub k_true: usize,
    pub config: GeneratorConfig,
}

impl Dataset2D {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points per label.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k_true];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Axis-aligned bounding box `(min, max)` of the points.
    pub fn bounds(&self) -> (Point, Point) {
        bounds(&self.points)
    }

    /// Length of the bounding-box diagonal.
    pub fn diagonal(&self) -> f64 {
        let (lo, hi) = self.bounds();
        ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).sqrt()
    }

    /// Builds a dataset from raw points and labels, e.g. loaded from CSV.
    /// Ground-truth centroids are the per-label means.
    pub fn from_labeled(points: Vec<Point>, labels: Vec<usize>, config: GeneratorConfig) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::LengthMismatch(points.len(), labels.len()));
        }
        let k_true = labels.iter().max().map_or(0, |&m| m + 1);
        let centroids_true = label_means(&points, &labels, k_true);
        Ok(Dataset2D {
            points,
            labels,
            centroids_true,
            k_true,
            config,
        })
    }
}

pub(crate) fn bounds(points: &[Point]) -> (Point, Point) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    (lo, hi)
}

fn label_means(points: &[Point], labels: &[usize], k: usize) -> Vec<Point> {
    let mut sums = vec![[0.0; 2]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        sums[l][0] += p[0];
        sums[l][1] += p[1];
        counts[l] += 1;
    }
    sums.iter()
        .zip(&counts)
        .map(|(s, &c)| {
            let c = c.max(1) as f64;
            [s[0] / c, s[1] / c]
        })
        .collect()
}

/// Splits `n` points over `k` clusters.
fn cluster_counts<R: Rng>(n: usize, k: usize, balance: Balance, rng: &mut R) -> Vec<usize> {
    match balance {
        Balance::Equal => (0..k).map(|i| n / k + usize::from(i < n % k)).collect(),
        Balance::RandomProportions => {
            // Weights in [0.5, 1.5]: no cluster is more than three times another.
            let weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..1.5)).collect();
            let total: f64 = weights.iter().sum();
            let spare = n - k;
            let raw: Vec<f64> = weights.iter().map(|w| w / total * spare as f64).collect();
            let mut counts: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
            let mut order: Vec<usize> = (0..k).collect();
            // Largest remainder, ties to the lower index.
            order.sort_by(|&a, &b| {
                let ra = raw[a] - raw[a].floor();
                let rb = raw[b] - raw[b].floor();
                rb.total_cmp(&ra).then(a.cmp(&b))
            });
            let assigned: usize = counts.iter().sum();
            for &i in order.iter().take(spare - assigned) {
                counts[i] += 1;
            }
            counts.iter_mut().for_each(|c| *c += 1);
            counts
        }
    }
}

/// Draws `k` centers in the center box with pairwise distance at least
/// `separation_min * max(spread_i, spread_j)`.
fn place_centers<R: Rng>(spreads: &[f64], separation_min: f64, rng: &mut R) -> Result<Vec<Point>> {
    const STALL: usize = 500;
    let k = spreads.len();
    let mut attempts = 0;
    let mut centers: Vec<Point> = Vec::with_capacity(k);
    let mut stalled = 0;
    while centers.len() < k {
        if attempts >= MAX_CENTER_ATTEMPTS {
            return Err(Error::InfeasibleSeparation { attempts });
        }
        attempts += 1;
        let j = centers.len();
        let c = [rng.random_range(0.0..CENTER_BOX), rng.random_range(0.0..CENTER_BOX)];
        let fits = centers.iter().enumerate().all(|(i, o)| {
            let d = ((c[0] - o[0]).powi(2) + (c[1] - o[1]).powi(2)).sqrt();
            d >= separation_min * spreads[i].max(spreads[j])
        });
        if fits {
            centers.push(c);
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= STALL {
                centers.clear();
                stalled = 0;
            }
        }
    }
    Ok(centers)
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Generates one dataset. Deterministic in `config` (including its seed).
pub fn generate(config: &GeneratorConfig) -> Result<Dataset2D> {
    config.validate()?;
    let mut rng = rng(config.seed);
    let n = config.n_total;
    let (lo, hi) = config.variance_range;
    let family = config.shape_family;

    let (points, labels, centroids_true) = match family {
        ShapeFamily::GaussianBlobs | ShapeFamily::VariedVarianceBlobs | ShapeFamily::Anisotropic => {
            let k = config.k;
            let sigmas: Vec<f64> = if family == ShapeFamily::VariedVarianceBlobs {
                (0..k).map(|_| sample_in(&mut rng, lo, hi)).collect()
            } else {
                vec![sample_in(&mut rng, lo, hi); k]
            };
            // Shared linear map for the anisotropic family: a rotation times
            // an axis stretch, determinant in [0.3, 1.7].
            let transform = if family == ShapeFamily::Anisotropic {
                let det = rng.random_range(0.3..=1.7);
                let stretch = rng.random_range(1.0..=2.0);
                let theta = rng.random_range(0.0..PI);
                let (s, c) = theta.sin_cos();
                let (a, b) = (stretch, det / stretch);
                Some([[c * a, -s * b], [s * a, c * b]])
            } else {
                None
            };
            let major = transform.map_or(1.0, |t| major_axis(&t));
            let spreads: Vec<f64> = sigmas.iter().map(|s| s * major).collect();
            let centers = place_centers(&spreads, config.separation_min, &mut rng)?;
            let counts = cluster_counts(n, k, config.balance, &mut rng);
            let mut points = Vec::with_capacity(n);
            let mut labels = Vec::with_capacity(n);
            for (j, (&count, center)) in counts.iter().zip(&centers).enumerate() {
                for _ in 0..count {
                    let z = [normal(&mut rng) * sigmas[j], normal(&mut rng) * sigmas[j]];
                    let d = match transform {
                        Some(t) => [t[0][0] * z[0] + t[0][1] * z[1], t[1][0] * z[0] + t[1][1] * z[1]],
                        None => z,
                    };
                    points.push([center[0] + d[0], center[1] + d[1]]);
                    labels.push(j);
                }
            }
            (points, labels, centers)
        }
        ShapeFamily::NoisyMoons | ShapeFamily::NoisyCircles => {
            let n_outer = n / 2 + n % 2;
            let n_inner = n - n_outer;
            let mut points = Vec::with_capacity(n);
            let mut labels = Vec::with_capacity(n);
            for (label, count) in [(0usize, n_outer), (1, n_inner)] {
                for i in 0..count {
                    let p = if family == ShapeFamily::NoisyMoons {
                        let t = linspace(0.0, PI, count, i);
                        let base = if label == 0 {
                            [t.cos(), t.sin()]
                        } else {
                            [1.0 - t.cos(), 0.5 - t.sin()]
                        };
                        [
                            (base[0] + config.noise_level * normal(&mut rng)) * MOON_SCALE + 20.0,
                            (base[1] + config.noise_level * normal(&mut rng)) * MOON_SCALE + 40.0,
                        ]
                    } else {
                        // Full circle without the duplicated end point.
                        let t = 2.0 * PI * i as f64 / count as f64;
                        let r = if label == 0 { 1.0 } else { CIRCLE_RADIUS_RATIO };
                        [
                            (r * t.cos() + config.noise_level * normal(&mut rng)) * CIRCLE_SCALE + 50.0,
                            (r * t.sin() + config.noise_level * normal(&mut rng)) * CIRCLE_SCALE + 50.0,
                        ]
                    };
                    points.push(p);
                    labels.push(label);
                }
            }
            let centroids = label_means(&points, &labels, 2);
            (points, labels, centroids)
        }
        ShapeFamily::NoStructure => {
            let points: Vec<Point> = (0..n)
                .map(|_| [rng.random_range(0.0..CENTER_BOX), rng.random_range(0.0..CENTER_BOX)])
                .collect();
            let labels = vec![0; n];
            let centroids = label_means(&points, &labels, 1);
            (points, labels, centroids)
        }
    };

    Ok(Dataset2D {
        k_true: centroids_true.len(),
        points,
        labels,
        centroids_true,
        config: config.clone(),
    })
}

fn sample_in<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

fn linspace(a: f64, b: f64, count: usize, i: usize) -> f64 {
    if count <= 1 {
        a
    } else {
        a + (b - a) * i as f64 / (count - 1) as f64
    }
}

/// Largest singular value of a 2x2 matrix.
fn major_axis(t: &[[f64; 2]; 2]) -> f64 {
    let (a, b, c, d) = (t[0][0], t[0][1], t[1][0], t[1][1]);
    let s1 = a * a + b * b + c * c + d * d;
    let det = a * d - b * c;
    ((s1 + (s1 * s1 - 4.0 * det * det).max(0.0).sqrt()) / 2.0).sqrt()
}

/// Ranges that a suite draws its per-dataset configurations from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSpec {
    /// Families with relative weights.
    pub family_mix: Vec<(ShapeFamily, f64)>,
    pub k_range: (usize, usize),
    pub n_range: (usize, usize),
    /// Bounds every drawn `variance_range` must stay inside.
    pub sigma_bounds: (f64, f64),
    pub separation_min: f64,
    pub noise_range: (f64, f64),
    /// Whether unequal cluster proportions may be drawn.
    pub random_proportions: bool,
}

impl Default for SuiteSpec {
    fn default() -> Self {
        SuiteSpec {
            family_mix: ShapeFamily::ALL.iter().map(|&f| (f, 1.0)).collect(),
            k_range: (2, 12),
            n_range: (20_000, 50_000),
            sigma_bounds: (0.5, 2.5),
            separation_min: 6.0,
            noise_range: (0.03, 0.08),
            random_proportions: true,
        }
    }
}

impl SuiteSpec {
    /// Blob-like families only, with the given minimum separation.
    pub fn separated_blobs(separation_min: f64) -> Self {
        SuiteSpec {
            family_mix: vec![
                (ShapeFamily::GaussianBlobs, 1.0),
                (ShapeFamily::VariedVarianceBlobs, 1.0),
                (ShapeFamily::Anisotropic, 1.0),
            ],
            separation_min,
            ..SuiteSpec::default()
        }
    }

    pub fn with_families(mut self, families: &[ShapeFamily]) -> Self {
        self.family_mix = families.iter().map(|&f| (f, 1.0)).collect();
        self
    }

    fn validate(&self) -> Result<()> {
        let total: f64 = self.family_mix.iter().map(|(_, w)| w.max(0.0)).sum();
        if !(total > 0.0) {
            return Err(Error::InvalidConfig("family_mix has no positive weight".into()));
        }
        if self.k_range.0 < 1 || self.k_range.0 > self.k_range.1 {
            return Err(Error::InvalidConfig("k_range must satisfy 1 <= low <= high".into()));
        }
        if self.n_range.0 > self.n_range.1 || self.n_range.0 < self.k_range.1 {
            return Err(Error::InvalidConfig("n_range must satisfy k_max <= low <= high".into()));
        }
        Ok(())
    }

    /// Configuration of suite member `index`; depends only on `(master_seed, index)`.
    pub fn config(&self, master_seed: u64, index: u64) -> GeneratorConfig {
        let seed = derive_seed(master_seed, index);
        let mut rng = rng(derive_seed(seed, u64::MAX));
        let total: f64 = self.family_mix.iter().map(|(_, w)| w.max(0.0)).sum();
        let mut pick = rng.random_range(0.0..total);
        let mut family = self.family_mix[0].0;
        for &(f, w) in &self.family_mix {
            let w = w.max(0.0);
            if pick < w {
                family = f;
                break;
            }
            pick -= w;
        }
        let k = rng.random_range(self.k_range.0..=self.k_range.1);
        let n_total = rng.random_range(self.n_range.0..=self.n_range.1);
        let (lo, hi) = self.sigma_bounds;
        let a = sample_in(&mut rng, lo, hi);
        let b = sample_in(&mut rng, lo, hi);
        let balance = if self.random_proportions && rng.random_bool(0.5) {
            Balance::RandomProportions
        } else {
            Balance::Equal
        };
        let noise_level = sample_in(&mut rng, self.noise_range.0, self.noise_range.1);
        GeneratorConfig {
            shape_family: family,
            k,
            n_total,
            variance_range: (a.min(b), a.max(b)),
            separation_min: self.separation_min,
            balance,
            noise_level,
            seed,
        }
    }
}

/// Generates `count` datasets; member `i` equals `generate(&spec.config(master_seed, i))`.
pub fn generate_suite(count: usize, master_seed: u64, spec: &SuiteSpec) -> Result<Vec<Dataset2D>> {
    if count == 0 {
        return Err(Error::InvalidConfig("suite count must be at least 1".into()));
    }
    spec.validate()?;
    (0..count as u64)
        .into_par_iter()
        .map(|i| generate(&spec.config(master_seed, i)))
        .collect()
}

/// Writes `points.csv` and `meta.json` into `dir`, creating it if needed.
pub fn write_dataset(ds: &Dataset2D, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join("points.csv");
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(&path, e);
    writeln!(w, "x,y,label").map_err(io)?;
    for (p, l) in ds.points.iter().zip(&ds.labels) {
        writeln!(w, "{:?},{:?},{}", p[0], p[1], l).map_err(io)?;
    }
    w.flush().map_err(io)?;

    let meta = Meta {
        config: ds.config.clone(),
        k_true: ds.k_true,
        centroids_true: ds.centroids_true.clone(),
    };
    let path = dir.join("meta.json");
    let json = serde_json::to_string_pretty(&meta).expect("meta serializes");
    fs::write(&path, json).map_err(|e| Error::io(&path, e))
}

#[derive(Serialize, Deserialize)]
struct Meta {
    config: GeneratorConfig,
    k_true: usize,
    centroids_true: Vec<Point>,
}

/// Reads a directory written by [`write_dataset`].
pub fn read_dataset(dir: &Path) -> Result<Dataset2D> {
    let path = dir.join("meta.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let meta: Meta = serde_json::from_str(&text).map_err(|e| Error::parse(&path, e))?;
    let (points, labels) = read_points_csv(&dir.join("points.csv"))?;
    Ok(Dataset2D {
        points,
        labels,
        centroids_true: meta.centroids_true,
        k_true: meta.k_true,
        config: meta.config,
    })
}

/// Reads an `x,y,label` CSV file.
pub fn read_points_csv(path: &Path) -> Result<(Vec<Point>, Vec<usize>)> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::parse(path, e))?;
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for row in reader.deserialize::<(f64, f64, usize)>() {
        let (x, y, l) = row.map_err(|e| Error::parse(path, e))?;
        points.push([x, y]);
        labels.push(l);
    }
    Ok((points, labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_structure_is_one_cluster() {
        let cfg = GeneratorConfig::new(ShapeFamily::NoStructure, 1, 100, 7);
        let ds = generate(&cfg).unwrap();
        assert_eq!(ds.k_true, 1);
        assert_eq!(ds.len(), 100);
        assert!(ds.labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn equal_twin_blobs_have_equal_counts_and_means_near_truth() {
        let cfg = GeneratorConfig::blobs(2, 20_000, 1).with_separation(8.0);
        let ds = generate(&cfg).unwrap();
        assert_eq!(ds.cluster_sizes(), vec![10_000, 10_000]);
        let sigma = ds.config.variance_range.1;
        // Recompute the means straight from the points.
        for j in 0..2 {
            let (mut sx, mut sy, mut c) = (0.0, 0.0, 0.0);
            for (p, &l) in ds.points.iter().zip(&ds.labels) {
                if l == j {
                    sx += p[0];
                    sy += p[1];
                    c += 1.0;
                }
            }
            let d = ((sx / c - ds.centroids_true[j][0]).powi(2) + (sy / c - ds.centroids_true[j][1]).powi(2)).sqrt();
            assert!(d < 0.5 * sigma, "cluster {j}: mean off by {d}");
        }
    }

    #[test]
    fn paper_scale_upper_bounds() {
        let ds = generate(&GeneratorConfig::blobs(12, 50_000, 3)).unwrap();
        assert_eq!(ds.k_true, 12);
        assert_eq!(ds.len(), 50_000);
        assert!(ds.cluster_sizes().iter().all(|&c| c > 0));
    }

    #[test]
    fn separation_holds_for_every_pair() {
        for seed in 0..20 {
            let cfg = GeneratorConfig::new(ShapeFamily::VariedVarianceBlobs, 8, 800, seed)
                .with_variance_range(0.5, 2.5)
                .with_separation(5.0);
            let ds = generate(&cfg).unwrap();
            let mut rng = rng(seed);
            // Recover the per-cluster sigmas the generator drew.
            let sigmas: Vec<f64> = (0..8).map(|_| sample_in(&mut rng, 0.5, 2.5)).collect();
            for i in 0..8 {
                for j in i + 1..8 {
                    let (a, b) = (ds.centroids_true[i], ds.centroids_true[j]);
                    let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
                    assert!(d >= 5.0 * sigmas[i].max(sigmas[j]) - 1e-12);
                }
            }
        }
    }

    #[test]
    fn random_proportions_sum_and_stay_positive() {
        let mut r = rng(5);
        for k in 1..13 {
            let counts = cluster_counts(1000 + k, k, Balance::RandomProportions, &mut r);
            assert_eq!(counts.iter().sum::<usize>(), 1000 + k);
            assert!(counts.iter().all(|&c| c >= 1));
        }
        let eq = cluster_counts(10, 3, Balance::Equal, &mut r);
        assert_eq!(eq, vec![4, 3, 3]);
    }

    #[test]
    fn infeasible_separation_is_reported() {
        let cfg = GeneratorConfig::blobs(12, 1200, 0)
            .with_variance_range(10.0, 10.0)
            .with_separation(10.0);
        assert!(matches!(generate(&cfg), Err(Error::InfeasibleSeparation { .. })));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(matches!(generate(&GeneratorConfig::blobs(0, 10, 0)), Err(Error::InvalidConfig(_))));
        assert!(matches!(generate(&GeneratorConfig::blobs(5, 4, 0)), Err(Error::InvalidConfig(_))));
        let bad = GeneratorConfig::blobs(2, 10, 0).with_variance_range(2.0, 1.0);
        assert!(matches!(generate(&bad), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn moons_and_circles_have_two_components() {
        for family in [ShapeFamily::NoisyMoons, ShapeFamily::NoisyCircles] {
            let ds = generate(&GeneratorConfig::new(family, 7, 1001, 2)).unwrap();
            assert_eq!(ds.k_true, 2);
            assert_eq!(ds.cluster_sizes(), vec![501, 500]);
        }
        // Concentric circles share a center.
        let c = generate(&GeneratorConfig::new(ShapeFamily::NoisyCircles, 2, 2000, 2)).unwrap();
        let (a, b) = (c.centroids_true[0], c.centroids_true[1]);
        assert!((a[0] - b[0]).abs() < 1.0 && (a[1] - b[1]).abs() < 1.0);
    }

    #[test]
    fn anisotropic_covariance_determinant_in_range() {
        for seed in 0..10 {
            let cfg = GeneratorConfig::new(ShapeFamily::Anisotropic, 2, 20_000, seed);
            let ds = generate(&cfg).unwrap();
            let sigma = sample_in(&mut rng(seed), 1.0, 2.0);
            let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
            for (p, &l) in ds.points.iter().zip(&ds.labels) {
                let c = ds.centroids_true[l];
                let (dx, dy) = (p[0] - c[0], p[1] - c[1]);
                sxx += dx * dx;
                syy += dy * dy;
                sxy += dx * dy;
            }
            let n = ds.len() as f64;
            let det_cov = (sxx / n) * (syy / n) - (sxy / n).powi(2);
            let det_a = (det_cov / sigma.powi(4)).sqrt();
            assert!((0.3 * 0.95..=1.7 * 1.05).contains(&det_a), "seed {seed}: det {det_a}");
        }
    }

    #[test]
    fn labels_follow_generating_component() {
        // Labels are contiguous per component, not nearest-center reassignments.
        let ds = generate(&GeneratorConfig::blobs(3, 300, 9).with_separation(1.0)).unwrap();
        assert_eq!(&ds.labels[..100], &[0; 100][..]);
        assert_eq!(&ds.labels[200..], &[2; 100][..]);
    }

    #[test]
    fn dataset_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = generate(&GeneratorConfig::blobs(3, 500, 5)).unwrap();
        write_dataset(&ds, dir.path()).unwrap();
        let back = read_dataset(dir.path()).unwrap();
        assert_eq!(back, ds);
        let header = fs::read_to_string(dir.path().join("points.csv")).unwrap();
        assert!(header.starts_with("x,y,label\n"));
    }
}
