//! Partitional clustering with pluggable initialization.
//!
//! Every algorithm takes an [`InitSpec`] (or, for x-means, grows its own) and
//! reports a [`ClusteringResult`] whose iteration counter starts at 1 for
//! the first assignment round.

mod gmm;
mod kmeans;
mod rfcm;
mod xmeans;

use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use gmm::{gmm_em, gmm_fit, Covariance, GaussianMixture, COVARIANCE_REG};
pub use kmeans::kmeans;
pub use rfcm::{memberships, rfcm, rough_region, RfcmParams, RoughRegion};
pub use xmeans::{xmeans, xmeans_from};

use crate::detect::InitParams;
use crate::seed::{derive_seed, rng};
use crate::{Error, Point, Result};

/// Where the starting centroids come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitSpec {
    /// `k` distinct data points chosen uniformly.
    Random { k: usize, seed: u64 },
    /// k-means++ seeding.
    PlusPlus { k: usize, seed: u64 },
    /// Parameters estimated by a detector. `k = 0` falls back to one
    /// cluster at the data mean.
    Detected(InitParams),
    Explicit(Vec<Point>),
}

impl InitSpec {
    /// Number of clusters this initialization asks for.
    pub fn k(&self) -> usize {
        match self {
            InitSpec::Random { k, .. } | InitSpec::PlusPlus { k, .. } => *k,
            InitSpec::Detected(p) => p.k.max(1),
            InitSpec::Explicit(c) => c.len(),
        }
    }

    /// Starting centroids for `points`.
    pub fn centroids(&self, points: &[Point]) -> Result<Vec<Point>> {
        if points.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let k = self.k();
        if k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if k > points.len() {
            return Err(Error::TooManyClusters { k, n: points.len() });
        }
        Ok(match self {
            InitSpec::Random { k, seed } => {
                let mut r = rng(*seed);
                sample(&mut r, points.len(), *k).iter().map(|i| points[i]).collect()
            }
            InitSpec::PlusPlus { k, seed } => plus_plus(points, *k, *seed),
            InitSpec::Detected(p) => p.clone().or_fallback(points).centroids,
            InitSpec::Explicit(c) => c.clone(),
        })
    }

    /// Mixture weights implied by the initialization, when it carries any.
    pub(crate) fn weights(&self) -> Option<Vec<f64>> {
        match self {
            InitSpec::Detected(p) if p.k > 0 => {
                let total: f64 = p.size_estimates.iter().sum();
                (total > 0.0 && p.size_estimates.iter().all(|&s| s > 0.0))
                    .then(|| p.size_estimates.iter().map(|s| s / total).collect())
            }
            _ => None,
        }
    }
}

/// k-means++ seeding: each new center is drawn with probability
/// proportional to the squared distance to the nearest chosen one.
fn plus_plus(points: &[Point], k: usize, seed: u64) -> Vec<Point> {
    let mut r = rng(seed);
    let mut centers = vec![points[r.random_range(0..points.len())]];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = r.random_range(0.0..total);
            let mut pick = points.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            pick
        } else {
            r.random_range(0..points.len())
        };
        let c = points[next];
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centers.push(c);
    }
    centers
}

#[inline]
pub(crate) fn sq_dist(a: &Point, b: &Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Index of the nearest centroid, ties to the lowest index.
#[inline]
pub(crate) fn nearest(p: &Point, centroids: &[Point]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Within-cluster sum of squared distances to the given centroids.
pub fn sse(points: &[Point], assignments: &[usize], centroids: &[Point]) -> f64 {
    points
        .iter()
        .zip(assignments)
        .map(|(p, &a)| sq_dist(p, &centroids[a]))
        .sum()
}

pub(crate) fn max_displacement(a: &[Point], b: &[Point]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| sq_dist(x, y).sqrt())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Point>,
    pub iterations: usize,
    pub converged: bool,
    /// Within-cluster SSE of `assignments` against `centroids`.
    pub inertia: f64,
    pub elapsed_seconds: f64,
    /// Objective after each iteration: SSE for k-means and RFCM, mean
    /// log-likelihood for GMM.
    #[serde(skip)]
    pub objective_trace: Vec<f64>,
}

impl ClusteringResult {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("result serializes");
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }
}

/// The partitional algorithms the toolkit benchmarks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    KMeans,
    XMeans,
    Rfcm,
    Gmm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::KMeans, Algorithm::XMeans, Algorithm::Rfcm, Algorithm::Gmm];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::KMeans => "kmeans",
            Algorithm::XMeans => "xmeans",
            Algorithm::Rfcm => "rfcm",
            Algorithm::Gmm => "gmm",
        }
    }

    /// Runs the algorithm from `init`. X-means grows from the initial
    /// centers up to `settings.k_max`.
    pub fn run(self, points: &[Point], init: &InitSpec, settings: &AlgorithmSettings, seed: u64) -> Result<ClusteringResult> {
        match self {
            Algorithm::KMeans => kmeans(points, init, settings.max_iter, settings.tol),
            Algorithm::XMeans => xmeans_from(points, init, settings.k_max.max(init.k()), seed),
            Algorithm::Rfcm => rfcm(points, init, &settings.rfcm),
            Algorithm::Gmm => gmm_em(points, init, settings.covariance, settings.gmm_max_iter, settings.gmm_tol),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kmeans" | "k-means" => Ok(Algorithm::KMeans),
            "xmeans" | "x-means" => Ok(Algorithm::XMeans),
            "rfcm" => Ok(Algorithm::Rfcm),
            "gmm" => Ok(Algorithm::Gmm),
            _ => Err(Error::InvalidConfig(format!("unknown algorithm {s:?}"))),
        }
    }
}

/// Iteration limits and per-algorithm parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSettings {
    pub max_iter: usize,
    pub tol: f64,
    pub k_max: usize,
    pub rfcm: RfcmParams,
    pub covariance: Covariance,
    pub gmm_max_iter: usize,
    pub gmm_tol: f64,
}

impl Default for AlgorithmSettings {
    fn default() -> Self {
        AlgorithmSettings {
            max_iter: 300,
            tol: 1e-6,
            k_max: 12,
            rfcm: RfcmParams::default(),
            covariance: Covariance::Full,
            gmm_max_iter: 200,
            gmm_tol: 1e-6,
        }
    }
}

/// A clustering procedure for a fixed `k`, as used by index sweeps.
pub trait Clusterer: Sync {
    fn cluster(&self, points: &[Point], k: usize, seed: u64) -> Result<ClusteringResult>;
}

/// k-means with k-means++ seeding, best of several restarts by inertia.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansClusterer {
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for KMeansClusterer {
    fn default() -> Self {
        KMeansClusterer {
            restarts: 5,
            max_iter: 300,
            tol: 1e-6,
        }
    }
}

impl Clusterer for KMeansClusterer {
    fn cluster(&self, points: &[Point], k: usize, seed: u64) -> Result<ClusteringResult> {
        let mut best: Option<ClusteringResult> = None;
        for r in 0..self.restarts.max(1) {
            let init = InitSpec::PlusPlus {
                k,
                seed: derive_seed(seed, r as u64),
            };
            let res = kmeans(points, &init, self.max_iter, self.tol)?;
            if best.as_ref().is_none_or(|b| res.inertia < b.inertia) {
                best = Some(res);
            }
        }
        Ok(best.expect("at least one restart"))
    }
}

impl<F> Clusterer for F
where
    F: Fn(&[Point], usize, u64) -> Result<ClusteringResult> + Sync,
{
    fn cluster(&self, points: &[Point], k: usize, seed: u64) -> Result<ClusteringResult> {
        self(points, k, seed)
    }
}
