use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{max_displacement, nearest, sq_dist, sse, ClusteringResult, InitSpec};
use crate::{Error, Point, Result};

/// Rough fuzzy c-means parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfcmParams {
    /// Fuzzifier, greater than 1.
    pub m: f64,
    /// A point belongs to the lower approximation of its top cluster when
    /// every other membership is below `delta` times the top membership.
    pub delta: f64,
    /// Weight of the lower approximation in the centroid update.
    pub w_lower: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for RfcmParams {
    fn default() -> Self {
        RfcmParams {
            m: 2.0,
            delta: 0.95,
            w_lower: 0.95,
            max_iter: 100,
            tol: 1e-5,
        }
    }
}

impl RfcmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.m > 1.0) {
            return Err(Error::InvalidConfig("fuzzifier m must exceed 1".into()));
        }
        if !(0.0..=1.0).contains(&self.delta) || !(0.0..=1.0).contains(&self.w_lower) {
            return Err(Error::InvalidConfig("delta and w_lower must lie in [0, 1]".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Rough region of one point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RoughRegion {
    Lower(usize),
    Boundary(Vec<usize>),
}

/// Fuzzy memberships of `p`; a point on a centroid belongs to it alone.
pub fn memberships(p: &Point, centroids: &[Point], m: f64) -> Vec<f64> {
    let d: Vec<f64> = centroids.iter().map(|c| sq_dist(p, c)).collect();
    if let Some(z) = d.iter().position(|&x| x == 0.0) {
        let mut u = vec![0.0; centroids.len()];
        u[z] = 1.0;
        return u;
    }
    // u_j = 1 / sum_l (d_j / d_l)^(1 / (m - 1)) on squared distances,
    // i.e. d_j^-e normalized.
    let e = 1.0 / (m - 1.0);
    let inv: Vec<f64> = if e == 1.0 { d.iter().map(|x| x.recip()).collect() } else { d.iter().map(|x| x.powf(-e)).collect() };
    let total: f64 = inv.iter().sum();
    inv.iter().map(|x| x / total).collect()
}

/// Region of a point given its memberships.
pub fn rough_region(u: &[f64], delta: f64) -> RoughRegion {
    let top = (0..u.len()).fold(0, |b, j| if u[j] > u[b] { j } else { b });
    let near: Vec<usize> = (0..u.len()).filter(|&j| j != top && u[j] >= delta * u[top]).collect();
    if near.is_empty() {
        RoughRegion::Lower(top)
    } else {
        let mut all = near;
        all.push(top);
        all.sort_unstable();
        RoughRegion::Boundary(all)
    }
}

/// Rough fuzzy c-means.
///
/// Centroids mix the plain mean of the lower approximation (weight
/// `w_lower`) with the `u^m`-weighted mean of the boundary; a cluster with
/// only one of the two uses it alone. Final assignments go to the nearest
/// centroid.
pub fn rfcm(points: &[Point], init: &InitSpec, params: &RfcmParams) -> Result<ClusteringResult> {
    let started = Instant::now();
    params.validate()?;
    let mut centroids = init.centroids(points)?;
    let k = centroids.len();
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iter {
        iterations += 1;
        let mut lower = vec![([0.0; 2], 0.0); k];
        let mut boundary = vec![([0.0; 2], 0.0); k];
        for p in points {
            let u = memberships(p, &centroids, params.m);
            match rough_region(&u, params.delta) {
                RoughRegion::Lower(j) => {
                    lower[j].0[0] += p[0];
                    lower[j].0[1] += p[1];
                    lower[j].1 += 1.0;
                }
                RoughRegion::Boundary(js) => {
                    for j in js {
                        let w = u[j].powf(params.m);
                        boundary[j].0[0] += w * p[0];
                        boundary[j].0[1] += w * p[1];
                        boundary[j].1 += w;
                    }
                }
            }
        }
        let next: Vec<Point> = (0..k)
            .map(|j| {
                let (ls, lw) = lower[j];
                let (bs, bw) = boundary[j];
                let lm = [ls[0] / lw, ls[1] / lw];
                let bm = [bs[0] / bw, bs[1] / bw];
                match (lw > 0.0, bw > 0.0) {
                    (true, true) => {
                        let w = params.w_lower;
                        [w * lm[0] + (1.0 - w) * bm[0], w * lm[1] + (1.0 - w) * bm[1]]
                    }
                    (true, false) => lm,
                    (false, true) => bm,
                    (false, false) => centroids[j],
                }
            })
            .collect();
        let shift = max_displacement(&centroids, &next);
        centroids = next;
        trace.push(hard_sse(points, &centroids));
        if shift < params.tol {
            converged = true;
            break;
        }
    }
    let assignments: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
    let inertia = sse(points, &assignments, &centroids);
    Ok(ClusteringResult {
        assignments,
        centroids,
        iterations,
        converged,
        inertia,
        elapsed_seconds: started.elapsed().as_secs_f64(),
        objective_trace: trace,
    })
}

fn hard_sse(points: &[Point], centroids: &[Point]) -> f64 {
    points.iter().map(|p| nearest(p, centroids).1).sum()
}
