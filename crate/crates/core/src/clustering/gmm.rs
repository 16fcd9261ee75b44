use std::f64::consts::PI;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{nearest, sse, ClusteringResult, InitSpec};
use crate::{Error, Point, Result};

/// Ridge added to every covariance diagonal.
pub const COVARIANCE_REG: f64 = 1e-6;

/// Responsibility mass below which a component counts as collapsed.
const MIN_MASS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Covariance {
    Spherical,
    Diagonal,
    #[default]
    Full,
}

impl std::str::FromStr for Covariance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "spherical" => Ok(Covariance::Spherical),
            "diagonal" | "diag" => Ok(Covariance::Diagonal),
            "full" => Ok(Covariance::Full),
            _ => Err(Error::InvalidConfig(format!("unknown covariance {s:?}"))),
        }
    }
}

/// Fitted mixture. Covariances are stored as `[xx, xy, yy]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    pub weights: Vec<f64>,
    pub means: Vec<Point>,
    pub covariances: Vec<[f64; 3]>,
    pub covariance: Covariance,
}

impl GaussianMixture {
    fn log_component(&self, j: usize, p: &Point) -> f64 {
        let [a, b, c] = self.covariances[j];
        let det = a * c - b * b;
        let dx = p[0] - self.means[j][0];
        let dy = p[1] - self.means[j][1];
        let maha = (c * dx * dx - 2.0 * b * dx * dy + a * dy * dy) / det;
        self.weights[j].ln() - (2.0 * PI).ln() - 0.5 * det.ln() - 0.5 * maha
    }

    /// Log-density of `p` and the normalized responsibilities.
    fn responsibilities(&self, p: &Point, out: &mut [f64]) -> f64 {
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.log_component(j, p);
        }
        let top = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = out.iter().map(|l| (l - top).exp()).sum();
        let log_density = top + total.ln();
        for o in out.iter_mut() {
            *o = (*o - log_density).exp();
        }
        log_density
    }

    /// Mean log-likelihood of `points`.
    pub fn mean_log_likelihood(&self, points: &[Point]) -> f64 {
        let mut r = vec![0.0; self.means.len()];
        points.iter().map(|p| self.responsibilities(p, &mut r)).sum::<f64>() / points.len() as f64
    }

    /// Most responsible component for `p`, ties to the lowest index.
    pub fn predict(&self, p: &Point) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for j in 0..self.means.len() {
            let l = self.log_component(j, p);
            if l > best.1 {
                best = (j, l);
            }
        }
        best.0
    }
}

/// Weighted covariance about `mean`, shaped by `kind`, plus the ridge.
fn covariance_of<'a>(
    kind: Covariance,
    members: impl Iterator<Item = (&'a Point, f64)>,
    mean: Point,
    mass: f64,
) -> [f64; 3] {
    let (mut xx, mut xy, mut yy) = (0.0, 0.0, 0.0);
    for (p, w) in members {
        let dx = p[0] - mean[0];
        let dy = p[1] - mean[1];
        xx += w * dx * dx;
        xy += w * dx * dy;
        yy += w * dy * dy;
    }
    let (xx, xy, yy) = (xx / mass, xy / mass, yy / mass);
    match kind {
        Covariance::Full => [xx + COVARIANCE_REG, xy, yy + COVARIANCE_REG],
        Covariance::Diagonal => [xx + COVARIANCE_REG, 0.0, yy + COVARIANCE_REG],
        Covariance::Spherical => {
            let v = 0.5 * (xx + yy) + COVARIANCE_REG;
            [v, 0.0, v]
        }
    }
}

/// Starting mixture: means from `init`, weights from the detector's size
/// estimates when present and otherwise from the nearest-mean partition,
/// covariances from that partition.
fn initial_mixture(points: &[Point], init: &InitSpec, kind: Covariance) -> Result<GaussianMixture> {
    let means = init.centroids(points)?;
    let k = means.len();
    let assign: Vec<usize> = points.iter().map(|p| nearest(p, &means).0).collect();
    let n = points.len() as f64;
    let global = {
        let mean = [
            points.iter().map(|p| p[0]).sum::<f64>() / n,
            points.iter().map(|p| p[1]).sum::<f64>() / n,
        ];
        covariance_of(kind, points.iter().map(|p| (p, 1.0)), mean, n)
    };
    let mut counts = vec![0usize; k];
    for &a in &assign {
        counts[a] += 1;
    }
    let covariances = (0..k)
        .map(|j| {
            if counts[j] < 2 {
                return global;
            }
            let members = points.iter().zip(&assign).filter(|(_, &a)| a == j).map(|(p, _)| (p, 1.0));
            covariance_of(kind, members, means[j], counts[j] as f64)
        })
        .collect();
    let weights = init
        .weights()
        .unwrap_or_else(|| counts.iter().map(|&c| (c.max(1)) as f64).collect::<Vec<_>>());
    let total: f64 = weights.iter().sum();
    Ok(GaussianMixture {
        weights: weights.iter().map(|w| w / total).collect(),
        means,
        covariances,
        covariance: kind,
    })
}

/// EM for a 2D Gaussian mixture; returns the clustering and the mixture.
///
/// Each iteration runs an E step, records the mean log-likelihood under
/// the current parameters, then an M step. Stops when the mean
/// log-likelihood improves by less than `tol`. A component whose
/// responsibility mass vanishes is an error.
pub fn gmm_fit(
    points: &[Point],
    init: &InitSpec,
    covariance: Covariance,
    max_iter: usize,
    tol: f64,
) -> Result<(ClusteringResult, GaussianMixture)> {
    let started = Instant::now();
    let mut model = initial_mixture(points, init, covariance)?;
    let k = model.means.len();
    let n = points.len() as f64;
    let mut resp = vec![0.0; points.len() * k];
    let mut trace: Vec<f64> = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let mut ll = 0.0;
        for (p, r) in points.iter().zip(resp.chunks_mut(k)) {
            ll += model.responsibilities(p, r);
        }
        ll /= n;
        if let Some(&prev) = trace.last() {
            if (ll - prev).abs() < tol {
                trace.push(ll);
                converged = true;
                break;
            }
        }
        trace.push(ll);
        for j in 0..k {
            let mass: f64 = resp.chunks(k).map(|r| r[j]).sum();
            if !(mass > MIN_MASS * n) {
                return Err(Error::DegenerateComponent(j));
            }
            let mut mean = [0.0; 2];
            for (p, r) in points.iter().zip(resp.chunks(k)) {
                mean[0] += r[j] * p[0];
                mean[1] += r[j] * p[1];
            }
            mean = [mean[0] / mass, mean[1] / mass];
            let members = points.iter().zip(resp.chunks(k)).map(|(p, r)| (p, r[j]));
            model.covariances[j] = covariance_of(covariance, members, mean, mass);
            model.means[j] = mean;
            model.weights[j] = mass / n;
        }
    }
    let assignments: Vec<usize> = points.iter().map(|p| model.predict(p)).collect();
    let inertia = sse(points, &assignments, &model.means);
    let result = ClusteringResult {
        assignments,
        centroids: model.means.clone(),
        iterations,
        converged,
        inertia,
        elapsed_seconds: started.elapsed().as_secs_f64(),
        objective_trace: trace,
    };
    Ok((result, model))
}

/// [`gmm_fit`] without the mixture parameters.
pub fn gmm_em(points: &[Point], init: &InitSpec, covariance: Covariance, max_iter: usize, tol: f64) -> Result<ClusteringResult> {
    gmm_fit(points, init, covariance, max_iter, tol).map(|(r, _)| r)
}
