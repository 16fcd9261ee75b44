//! Internal cluster validity indices and the k-sweep estimator.
//!
//! | index | formula | better |
//! |---|---|---|
//! | BIC | `-2 lnL + p ln n` | lower |
//! | AIC | `-2 lnL + 2p` | lower |
//! | Dunn | min inter-cluster point distance / max cluster diameter | higher |
//! | Davies-Bouldin | mean over i of max over j of `(s_i + s_j) / d(c_i, c_j)` | lower |
//! | Silhouette | mean of `(b - a) / max(a, b)` | higher |
//! | Calinski-Harabasz | `[B / (k - 1)] / [W / (n - k)]` | higher |
//! | Gap | `E[ln W_ref] - ln W` | standard-error rule |
//!
//! `lnL` is the hard-assignment log-likelihood of a spherical Gaussian
//! mixture whose means are the given centroids, with per-cluster variance
//! and mixing weight set to their maximum-likelihood values, and
//! `p = 3k + (k - 1)` free parameters. Dunn, Davies-Bouldin, Silhouette and
//! Calinski-Harabasz consider non-empty clusters only and need at least two.

mod gap;
mod geometry;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use gap::{dispersion, gap_statistic, reference_cluster_seed, reference_points, GapResult, DEFAULT_B_REFS};

use crate::clustering::{sq_dist, Clusterer};
use crate::seed::derive_seed;
use crate::{Error, Point, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IndexKind {
    #[serde(rename = "BIC")]
    Bic,
    #[serde(rename = "AIC")]
    Aic,
    Dunn,
    DaviesBouldin,
    Silhouette,
    CalinskiHarabasz,
    GapStatistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelectionRule {
    Minimize,
    Maximize,
    GapRule,
}

impl IndexKind {
    pub const ALL: [IndexKind; 7] = [
        IndexKind::Bic,
        IndexKind::Aic,
        IndexKind::Dunn,
        IndexKind::DaviesBouldin,
        IndexKind::Silhouette,
        IndexKind::CalinskiHarabasz,
        IndexKind::GapStatistic,
    ];

    pub fn selection_rule(self) -> SelectionRule {
        match self {
            IndexKind::Bic | IndexKind::Aic | IndexKind::DaviesBouldin => SelectionRule::Minimize,
            IndexKind::Dunn | IndexKind::Silhouette | IndexKind::CalinskiHarabasz => SelectionRule::Maximize,
            IndexKind::GapStatistic => SelectionRule::GapRule,
        }
    }

    /// Smallest `k` the index is defined for.
    pub fn min_k(self) -> usize {
        match self {
            IndexKind::Bic | IndexKind::Aic | IndexKind::GapStatistic => 1,
            _ => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            IndexKind::Bic => "bic",
            IndexKind::Aic => "aic",
            IndexKind::Dunn => "dunn",
            IndexKind::DaviesBouldin => "db",
            IndexKind::Silhouette => "sw",
            IndexKind::CalinskiHarabasz => "ch",
            IndexKind::GapStatistic => "gap",
        }
    }
}

impl std::fmt::Display for IndexKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

impl std::str::FromStr for IndexKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "bic" => IndexKind::Bic,
            "aic" => IndexKind::Aic,
            "dunn" | "dn" => IndexKind::Dunn,
            "db" | "daviesbouldin" | "davies-bouldin" => IndexKind::DaviesBouldin,
            "sw" | "silhouette" => IndexKind::Silhouette,
            "ch" | "calinskiharabasz" | "calinski-harabasz" => IndexKind::CalinskiHarabasz,
            "gap" | "gapstatistic" => IndexKind::GapStatistic,
            _ => return Err(Error::InvalidConfig(format!("unknown index {s:?}"))),
        })
    }
}

/// Outcome of a k-sweep for one index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub kind: IndexKind,
    pub values: BTreeMap<usize, f64>,
    /// Standard errors of the gap values; empty for other indices.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub std_errs: BTreeMap<usize, f64>,
    pub k_selected: usize,
    pub elapsed_seconds: f64,
}

fn check_inputs(points: &[Point], assignments: &[usize], centroids: &[Point]) -> Result<()> {
    if points.len() != assignments.len() {
        return Err(Error::LengthMismatch(points.len(), assignments.len()));
    }
    if points.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if centroids.is_empty() {
        return Err(Error::InvalidInput("at least one centroid is required".into()));
    }
    if let Some(&a) = assignments.iter().find(|&&a| a >= centroids.len()) {
        return Err(Error::InvalidInput(format!("assignment {a} out of range for k = {}", centroids.len())));
    }
    Ok(())
}

/// Per-cluster point counts and squared distances to the centroid.
fn cluster_sse(points: &[Point], assignments: &[usize], centroids: &[Point]) -> (Vec<usize>, Vec<f64>) {
    let mut counts = vec![0usize; centroids.len()];
    let mut sse = vec![0.0; centroids.len()];
    for (p, &a) in points.iter().zip(assignments) {
        counts[a] += 1;
        sse[a] += sq_dist(p, &centroids[a]);
    }
    (counts, sse)
}

/// Hard-assignment log-likelihood of the spherical Gaussian mixture with
/// means at `centroids` and maximum-likelihood variances and weights.
pub fn log_likelihood(points: &[Point], assignments: &[usize], centroids: &[Point]) -> Result<f64> {
    check_inputs(points, assignments, centroids)?;
    let n = points.len() as f64;
    let (counts, sse) = cluster_sse(points, assignments, centroids);
    let mut ll = 0.0;
    for (&c, &s) in counts.iter().zip(&sse) {
        if c == 0 {
            continue;
        }
        let nj = c as f64;
        let var = s / (2.0 * nj);
        if !(var > 0.0) {
            return Err(Error::IndexUndefined {
                index: "likelihood",
                k: centroids.len(),
            });
        }
        // Sum over members of ln(w) - ln(2 pi var) - |x - c|^2 / (2 var).
        ll += nj * (nj / n).ln() - nj * (2.0 * PI * var).ln() - nj;
    }
    Ok(ll)
}

/// Free parameters of a k-component spherical 2D mixture.
pub fn free_parameters(k: usize) -> f64 {
    (3 * k + (k - 1)) as f64
}

pub fn bic(points: &[Point], assignments: &[usize], centroids: &[Point]) -> Result<f64> {
    let ll = log_likelihood(points, assignments, centroids)?;
    Ok(-2.0 * ll + free_parameters(centroids.len()) * (points.len() as f64).ln())
}

pub fn aic(points: &[Point], assignments: &[usize], centroids: &[Point]) -> Result<f64> {
    let ll = log_likelihood(points, assignments, centroids)?;
    Ok(-2.0 * ll + 2.0 * free_parameters(centroids.len()))
}

/// Members of each non-empty cluster; errors when fewer than two exist.
fn groups(points: &[Point], assignments: &[usize], k: usize, index: &'static str) -> Result<Vec<Vec<Point>>> {
    let mut g = vec![Vec::new(); k];
    for (p, &a) in points.iter().zip(assignments) {
        g[a].push(*p);
    }
    g.retain(|m| !m.is_empty());
    if g.len() < 2 {
        return Err(Error::IndexUndefined { index, k });
    }
    Ok(g)
}

pub fn dunn(points: &[Point], assignments: &[usize], centroids: &[Point]) -> Result<f64> {
    check_inputs(points, assignments, centroids)?;
    let undefined = Error::IndexUndefined {
        index: "dunn",
        k: centroids.len(),
    };
    let g = groups(points, assignments, centroids.len(), "dunn")?;
    let diameter = g.iter().map(|m| geometry::diameter(m)).fold(0.0, f64::max);
    if !(diameter > 0.0) {
        return Err(undefined);
    }
    let sorted: Vec<Vec<Point>> = g
        .iter()
        .map(|m| {
            let mut s = m.clone();
            s.sort_by(|a, b| a[0].total_cmp(&b[0]));
            s
        })
        .collect();
    let mut separation = f64::INFINITY;
    for i in 0..sorted.len() {
        for j in i + 1..sorted.len() {
            separation = separation.min(geometry::min_distance(&sorted[i], &sorted[j]));
        }
    }
    Ok(separation / diameter)
}

pub fn davies_bouldin(points: &[Point], assignments: &[usize], centroids: &[Point]) -> Result<f64> {
    check_inputs(points, assignments, centroids)?;
    let k = centroids.len();
    let mut counts = vec![0usize; k];
    let mut spread = vec![0.0; k];
    for (p, &a) in points.iter().zip(assignments) {
        counts[a] += 1;
        spread[a] += sq_dist(p, &centroids[a]).sqrt();
    }
    let live: Vec<usize> = (0..k).filter(|&j| counts[j] > 0).collect();
    if live.len() < 2 {
        return Err(Error::IndexUndefined { index: "davies-bouldin", k });
    }
    let s: Vec<f64> = (0..k).map(|j| spread[j] / counts[j].max(1) as f64).collect();
    let mut total = 0.0;
    for &i in &live {
        let mut worst: f64 = 0.0;
        for &j in &live {
            if i == j {
                continue;
            }
            let d = sq_dist(&centroids[i], &centroids[j]).sqrt();
            if d == 0.0 {
                return Err(Error::IndexUndefined { index: "davies-bouldin", k });
            }
            worst = worst.max((s[i] + s[j]) / d);
        }
        total += worst;
    }
    Ok(total / live.len() as f64)
}

pub fn silhouette(points: &[Point], assignments: &[usize], centroids: &[Point]) -> Result<f64> {
    check_inputs(points, assignments, centroids)?;
    let k = centroids.len();
    let mut counts = vec![0usize; k];
    for &a in assignments {
        counts[a] += 1;
    }
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::IndexUndefined { index: "silhouette", k });
    }
    // Per-point values are summed sequentially so the result does not
    // depend on thread scheduling.
    let per_point: Vec<f64> = points
        .par_iter()
        .zip(assignments.par_iter())
        .map(|(p, &own)| {
            if counts[own] < 2 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            for (q, &a) in points.iter().zip(assignments) {
                sums[a] += sq_dist(p, q).sqrt();
            }
            let a = sums[own] / (counts[own] - 1) as f64;
            let b = (0..k)
                .filter(|&j| j != own && counts[j] > 0)
                .map(|j| sums[j] / counts[j] as f64)
                .fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m > 0.0 {
                (b - a) / m
            } else {
                0.0
            }
        })
        .collect();
    Ok(per_point.iter().sum::<f64>() / points.len() as f64)
}

pub fn calinski_harabasz(points: &[Point], assignments: &[usize], centroids: &[Point]) -> Result<f64> {
    check_inputs(points, assignments, centroids)?;
    let n = points.len();
    let (counts, sse) = cluster_sse(points, assignments, centroids);
    let live = counts.iter().filter(|&&c| c > 0).count();
    let undefined = Error::IndexUndefined {
        index: "calinski-harabasz",
        k: centroids.len(),
    };
    if live < 2 || n <= live {
        return Err(undefined);
    }
    let mean = points
        .iter()
        .fold([0.0, 0.0], |m, p| [m[0] + p[0] / n as f64, m[1] + p[1] / n as f64]);
    let within: f64 = sse.iter().sum();
    let between: f64 = counts
        .iter()
        .zip(centroids)
        .map(|(&c, cen)| c as f64 * sq_dist(cen, &mean))
        .sum();
    if !(within > 0.0) {
        return Err(undefined);
    }
    Ok((between / (live - 1) as f64) / (within / (n - live) as f64))
}

/// Evaluates one index on a fixed partition.
///
/// The gap statistic needs a clusterer for its reference datasets and is
/// computed by [`gap_statistic`] instead.
pub fn score(kind: IndexKind, points: &[Point], assignments: &[usize], centroids: &[Point]) -> Result<f64> {
    match kind {
        IndexKind::Bic => bic(points, assignments, centroids),
        IndexKind::Aic => aic(points, assignments, centroids),
        IndexKind::Dunn => dunn(points, assignments, centroids),
        IndexKind::DaviesBouldin => davies_bouldin(points, assignments, centroids),
        IndexKind::Silhouette => silhouette(points, assignments, centroids),
        IndexKind::CalinskiHarabasz => calinski_harabasz(points, assignments, centroids),
        IndexKind::GapStatistic => Err(Error::InvalidInput(
            "the gap statistic is computed with gap_statistic".into(),
        )),
    }
}

/// Picks `k` from sweep values by the index's selection rule; ties go to
/// the smaller `k`.
pub fn select_k(kind: IndexKind, values: &BTreeMap<usize, f64>, std_errs: &BTreeMap<usize, f64>) -> Option<usize> {
    let mut it = values.iter();
    let first = it.next()?;
    match kind.selection_rule() {
        SelectionRule::Minimize => Some(*it.fold(first, |b, c| if c.1 < b.1 { c } else { b }).0),
        SelectionRule::Maximize => Some(*it.fold(first, |b, c| if c.1 > b.1 { c } else { b }).0),
        SelectionRule::GapRule => {
            for (&k, &g) in values {
                if let (Some(&next), Some(&se)) = (values.get(&(k + 1)), std_errs.get(&(k + 1))) {
                    if g >= next - se {
                        return Some(k);
                    }
                }
            }
            values.keys().next_back().copied()
        }
    }
}

/// Sweeps `k` over the index's range up to `k_max`, clustering with
/// `clusterer` at every `k`, and selects `k` by the index's rule.
///
/// A `k` at which clustering or scoring fails is left out of the values.
/// Elapsed time covers clustering and scoring for every `k`.
pub fn estimate_k(
    points: &[Point],
    kind: IndexKind,
    k_max: usize,
    clusterer: &dyn Clusterer,
    seed: u64,
) -> Result<IndexReport> {
    if k_max < 2 {
        return Err(Error::InvalidConfig("k_max must be at least 2".into()));
    }
    let mut values = BTreeMap::new();
    let mut std_errs = BTreeMap::new();
    let mut elapsed = 0.0;
    for k in kind.min_k()..=k_max.min(points.len()) {
        let started = Instant::now();
        let k_seed = derive_seed(seed, k as u64);
        let outcome = if kind == IndexKind::GapStatistic {
            gap_statistic(points, k, clusterer, DEFAULT_B_REFS, k_seed).map(|g| (g.gap, Some(g.std_err)))
        } else {
            clusterer
                .cluster(points, k, k_seed)
                .and_then(|res| score(kind, points, &res.assignments, &res.centroids))
                .map(|v| (v, None))
        };
        elapsed += started.elapsed().as_secs_f64();
        if let Ok((v, se)) = outcome {
            if v.is_finite() {
                values.insert(k, v);
                if let Some(se) = se {
                    std_errs.insert(k, se);
                }
            }
        }
    }
    let k_selected = select_k(kind, &values, &std_errs).ok_or(Error::SweepFailed)?;
    Ok(IndexReport {
        kind,
        values,
        std_errs,
        k_selected,
        elapsed_seconds: elapsed,
    })
}
