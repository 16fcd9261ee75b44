use std::time::Instant;

use super::{kmeans, ClusteringResult, InitSpec};
use crate::indices::bic;
use crate::seed::derive_seed;
use crate::{Error, Point, Result};

const MAX_ITER: usize = 300;
const TOL: f64 = 1e-6;
const CHILD_TRIALS: u64 = 2;

/// X-means starting from k-means++ with `k_min` centers.
pub fn xmeans(points: &[Point], k_min: usize, k_max: usize, seed: u64) -> Result<ClusteringResult> {
    let init = InitSpec::PlusPlus {
        k: k_min,
        seed: derive_seed(seed, 0),
    };
    xmeans_from(points, &init, k_max, seed)
}

/// X-means from an arbitrary initialization.
///
/// Each round tries to split every cluster in two (best of two 2-means
/// runs on its members) and keeps the splits whose local BIC beats the
/// parent's, largest improvement first, until `k_max` is reached. Global
/// k-means then refines all centers. Stops when a round accepts no split.
pub fn xmeans_from(points: &[Point], init: &InitSpec, k_max: usize, seed: u64) -> Result<ClusteringResult> {
    let started = Instant::now();
    if init.k() > k_max {
        return Err(Error::InvalidConfig(format!("initial k = {} exceeds k_max = {k_max}", init.k())));
    }
    let mut res = kmeans(points, init, MAX_ITER, TOL)?;
    let mut iterations = res.iterations;
    for round in 1u64.. {
        let k = res.k();
        if k >= k_max {
            break;
        }
        let round_seed = derive_seed(seed, round);
        let mut splits: Vec<(f64, usize, [Point; 2])> = Vec::new();
        for j in 0..k {
            let members: Vec<Point> = points
                .iter()
                .zip(&res.assignments)
                .filter(|(_, &a)| a == j)
                .map(|(p, _)| *p)
                .collect();
            if let Some((gain, children)) = try_split(&members, res.centroids[j], derive_seed(round_seed, j as u64)) {
                splits.push((gain, j, children));
            }
        }
        if splits.is_empty() {
            break;
        }
        splits.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        splits.truncate(k_max - k);
        let mut centroids = res.centroids.clone();
        for (_, j, children) in &splits {
            centroids[*j] = children[0];
            centroids.push(children[1]);
        }
        res = kmeans(points, &InitSpec::Explicit(centroids), MAX_ITER, TOL)?;
        iterations += res.iterations;
    }
    res.iterations = iterations;
    res.elapsed_seconds = started.elapsed().as_secs_f64();
    Ok(res)
}

/// BIC gain and child centers when splitting `members` pays off.
fn try_split(members: &[Point], center: Point, seed: u64) -> Option<(f64, [Point; 2])> {
    if members.len() < 4 {
        return None;
    }
    let parent = bic(members, &vec![0; members.len()], &[center]).ok()?;
    let child = (0..CHILD_TRIALS)
        .filter_map(|t| kmeans(members, &InitSpec::PlusPlus { k: 2, seed: derive_seed(seed, t) }, MAX_ITER, TOL).ok())
        .min_by(|a, b| a.inertia.total_cmp(&b.inertia))?;
    let child_bic = bic(members, &child.assignments, &child.centroids).ok()?;
    (child_bic < parent).then(|| (parent - child_bic, [child.centroids[0], child.centroids[1]]))
}
