use std::time::Instant;

use super::{max_displacement, nearest, sq_dist, sse, ClusteringResult, InitSpec};
use crate::{Error, Point, Result};

/// Assigns every point to its nearest centroid; returns the SSE.
fn assign(points: &[Point], centroids: &[Point], assignments: &mut [usize]) -> f64 {
    let mut total = 0.0;
    for (p, a) in points.iter().zip(assignments.iter_mut()) {
        let (j, d) = nearest(p, centroids);
        *a = j;
        total += d;
    }
    total
}

/// Member means. A cluster left empty takes over the point farthest from
/// its own centroid and is re-centered on it.
fn update(points: &[Point], assignments: &mut [usize], centroids: &[Point]) -> Vec<Point> {
    let k = centroids.len();
    let mut counts = vec![0usize; k];
    for &a in assignments.iter() {
        counts[a] += 1;
    }
    let mut reseeded = vec![None; k];
    for j in 0..k {
        if counts[j] > 0 {
            continue;
        }
        let far = points
            .iter()
            .zip(assignments.iter())
            .enumerate()
            .filter(|(_, (_, &a))| counts[a] > 1)
            .map(|(i, (p, &a))| (i, sq_dist(p, &centroids[a])))
            .fold(None, |best: Option<(usize, f64)>, (i, d)| match best {
                Some((_, bd)) if bd >= d => best,
                _ => Some((i, d)),
            });
        if let Some((i, _)) = far {
            counts[assignments[i]] -= 1;
            assignments[i] = j;
            counts[j] = 1;
            reseeded[j] = Some(points[i]);
        }
    }
    let mut sums = vec![[0.0; 2]; k];
    for (p, &a) in points.iter().zip(assignments.iter()) {
        sums[a][0] += p[0];
        sums[a][1] += p[1];
    }
    (0..k)
        .map(|j| match (reseeded[j], counts[j]) {
            (Some(p), _) => p,
            (None, 0) => centroids[j],
            (None, c) => [sums[j][0] / c as f64, sums[j][1] / c as f64],
        })
        .collect()
}

/// Lloyd's algorithm.
///
/// Each iteration assigns points to the nearest centroid (ties to the lowest
/// index) and moves centroids to member means. Stops once no centroid moves
/// by `tol` or more, or after `max_iter` iterations. The returned
/// assignments are recomputed against the final centroids.
pub fn kmeans(points: &[Point], init: &InitSpec, max_iter: usize, tol: f64) -> Result<ClusteringResult> {
    let start = Instant::now();
    if init.k() > points.len() {
        return Err(Error::TooManyClusters {
            k: init.k(),
            n: points.len(),
        });
    }
    let mut centroids = init.centroids(points)?;
    let mut assignments = vec![0usize; points.len()];
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        trace.push(assign(points, &centroids, &mut assignments));
        let next = update(points, &mut assignments, &centroids);
        let shift = max_displacement(&centroids, &next);
        centroids = next;
        if shift < tol {
            converged = true;
            break;
        }
    }
    let inertia = assign(points, &centroids, &mut assignments);
    trace.push(inertia);
    debug_assert!((inertia - sse(points, &assignments, &centroids)).abs() <= 1e-9 * inertia.max(1.0));
    Ok(ClusteringResult {
        assignments,
        centroids,
        iterations,
        converged,
        inertia,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        objective_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate, GeneratorConfig};
    use crate::seed::rng;
    use rand::Rng;

    #[test]
    fn fixed_point_converges_in_one_iteration() {
        let locs = [[0.0, 0.0], [5.0, 1.0], [-3.0, 7.0]];
        let pts: Vec<Point> = locs.iter().flat_map(|&p| std::iter::repeat_n(p, 4)).collect();
        let res = kmeans(&pts, &InitSpec::Explicit(locs.to_vec()), 300, 1e-6).unwrap();
        assert_eq!(res.iterations, 1);
        assert!(res.converged);
        assert_eq!(res.inertia, 0.0);
        assert_eq!(res.assignments, [0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2]);
    }

    #[test]
    fn more_clusters_than_points_is_an_error() {
        let pts = [[0.0, 0.0], [1.0, 1.0]];
        let err = kmeans(&pts, &InitSpec::Explicit(vec![[0.0, 0.0]; 3]), 10, 0.0).unwrap_err();
        assert!(err.to_string().contains("more clusters than points"));
    }

    #[test]
    fn inertia_never_increases() {
        for seed in 0..30 {
            let ds = generate(&GeneratorConfig::blobs(6, 1500, seed).with_separation(2.0)).unwrap();
            let res = kmeans(&ds.points, &InitSpec::Random { k: 6, seed }, 300, 0.0).unwrap();
            for w in res.objective_trace.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12), "{:?}", res.objective_trace);
            }
            let recomputed = sse(&ds.points, &res.assignments, &res.centroids);
            assert!((res.inertia - recomputed).abs() <= 1e-9 * recomputed);
            assert!(res.assignments.iter().all(|&a| a < 6));
        }
    }

    #[test]
    fn empty_cluster_is_reseeded_at_farthest_point() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [10.0, 0.0]];
        // Second centroid is far from everything and starts empty.
        let res = kmeans(&pts, &InitSpec::Explicit(vec![[1.0, 0.0], [100.0, 100.0]]), 10, 0.0).unwrap();
        assert_eq!(res.centroids[1], [10.0, 0.0]);
        assert_eq!(res.assignments, [0, 0, 1]);
    }

    /// Smallest SSE over every split of the points into two non-empty groups.
    fn best_two_partition(pts: &[Point]) -> f64 {
        let n = pts.len();
        let mut best = f64::INFINITY;
        for mask in 1u32..(1 << n) - 1 {
            let mut cost = 0.0;
            for side in [true, false] {
                let members: Vec<&Point> = (0..n).filter(|&i| ((mask >> i) & 1 == 1) == side).map(|i| &pts[i]).collect();
                let m = members.len() as f64;
                let mx = members.iter().map(|p| p[0]).sum::<f64>() / m;
                let my = members.iter().map(|p| p[1]).sum::<f64>() / m;
                cost += members.iter().map(|p| (p[0] - mx).powi(2) + (p[1] - my).powi(2)).sum::<f64>();
            }
            best = best.min(cost);
        }
        best
    }

    #[test]
    fn best_of_all_seedings_reaches_global_optimum() {
        let mut r = rng(17);
        for n in [5usize, 8, 12] {
            let pts: Vec<Point> = (0..n).map(|_| [r.random_range(0.0..10.0), r.random_range(0.0..10.0)]).collect();
            let mut best = f64::INFINITY;
            for i in 0..n {
                for j in i + 1..n {
                    let res = kmeans(&pts, &InitSpec::Explicit(vec![pts[i], pts[j]]), 300, 0.0).unwrap();
                    best = best.min(res.inertia);
                }
            }
            let opt = best_two_partition(&pts);
            assert!((best - opt).abs() <= 1e-9 * opt, "n={n}: {best} vs {opt}");
        }
    }
}
