//! Evaluation metrics and the benchmark harness.

mod assignment;
mod bench;
pub mod charts;
mod timing;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use assignment::optimal_assignment;
pub use bench::{
    is_timing_column, run_bench, write_csv, write_outputs, AlgorithmRun, BenchConfig, BenchRecord, Summary,
};
pub use timing::{time_scaling_experiment, TimingConfig, TimingRow};

use crate::{Error, Point, Result};

pub fn euclidean(p: Point, q: Point) -> f64 {
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

/// Optimal matching between true and detected centroids.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MatchReport {
    /// `(true_index, detected_index)` pairs, sorted by true index.
    pub pairs: Vec<(usize, usize)>,
    pub distances: Vec<f64>,
    pub unmatched_true: Vec<usize>,
    pub unmatched_detected: Vec<usize>,
    pub mean_distance: f64,
    pub max_distance: f64,
}

impl MatchReport {
    pub fn total_distance(&self) -> f64 {
        self.distances.iter().sum()
    }
}

/// Matches the two centroid sets so the summed distance is minimal.
pub fn match_centroids(true_centroids: &[Point], detected: &[Point]) -> MatchReport {
    let cost: Vec<Vec<f64>> = true_centroids
        .iter()
        .map(|t| detected.iter().map(|d| euclidean(*t, *d)).collect())
        .collect();
    let assign = optimal_assignment(&cost);
    let mut report = MatchReport::default();
    let mut used = vec![false; detected.len()];
    for (i, a) in assign.iter().enumerate() {
        match a {
            Some(j) => {
                used[*j] = true;
                report.pairs.push((i, *j));
                report.distances.push(cost[i][*j]);
            }
            None => report.unmatched_true.push(i),
        }
    }
    report.unmatched_detected = (0..detected.len()).filter(|&j| !used[j]).collect();
    if !report.distances.is_empty() {
        report.mean_distance = report.total_distance() / report.distances.len() as f64;
        report.max_distance = report.distances.iter().copied().fold(0.0, f64::max);
    }
    report
}

/// Compacts arbitrary label values to `0..k` in order of first value.
fn dense(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut ids = BTreeMap::new();
    for &l in labels {
        let next = ids.len();
        ids.entry(l).or_insert(next);
    }
    (labels.iter().map(|l| ids[l]).collect(), ids.len())
}

/// Fraction of points whose predicted cluster maps to their true class
/// under the cluster-to-class correspondence that maximizes that fraction.
pub fn accuracy_rate(labels_true: &[usize], labels_pred: &[usize]) -> Result<f64> {
    if labels_true.len() != labels_pred.len() {
        return Err(Error::LengthMismatch(labels_true.len(), labels_pred.len()));
    }
    if labels_true.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (t, kt) = dense(labels_true);
    let (p, kp) = dense(labels_pred);
    let mut table = vec![vec![0.0; kp]; kt];
    for (&a, &b) in t.iter().zip(&p) {
        table[a][b] += 1.0;
    }
    let cost: Vec<Vec<f64>> = table.iter().map(|r| r.iter().map(|c| -c).collect()).collect();
    let matched: f64 = optimal_assignment(&cost)
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| table[i][j]))
        .sum();
    Ok(matched / labels_true.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn three_four_five() {
        assert_eq!(euclidean([0.0, 0.0], [3.0, 4.0]), 5.0);
        assert_eq!(euclidean([1.5, -2.0], [1.5, -2.0]), 0.0);
    }

    #[test]
    fn obvious_matching() {
        let r = match_centroids(&[[0.0, 0.0], [10.0, 10.0]], &[[10.1, 10.1], [0.2, 0.0]]);
        assert_eq!(r.pairs, vec![(0, 1), (1, 0)]);
        assert!(r.unmatched_true.is_empty() && r.unmatched_detected.is_empty());
        assert!((r.max_distance - 0.2).abs() < 1e-12);
    }

    #[test]
    fn unequal_sets_list_unmatched() {
        let r = match_centroids(&[[0.0, 0.0], [5.0, 5.0], [9.0, 9.0]], &[[5.1, 5.0]]);
        assert_eq!(r.pairs, vec![(1, 0)]);
        assert_eq!(r.unmatched_true, vec![0, 2]);
        let r = match_centroids(&[[5.0, 5.0]], &[[0.0, 0.0], [5.0, 5.0]]);
        assert_eq!(r.unmatched_detected, vec![0]);
        assert_eq!(r.mean_distance, 0.0);
        let empty = match_centroids(&[[1.0, 1.0]], &[]);
        assert_eq!(empty.unmatched_true, vec![0]);
    }

    #[test]
    fn accuracy_basics() {
        let t = [0, 0, 1, 1, 2, 2];
        assert_eq!(accuracy_rate(&t, &t).unwrap(), 1.0);
        assert_eq!(accuracy_rate(&t, &[7, 7, 3, 3, 5, 5]).unwrap(), 1.0);
        assert!((accuracy_rate(&t, &[0, 0, 0, 0, 0, 0]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(accuracy_rate(&t, &[0]), Err(Error::LengthMismatch(6, 1))));
    }

    proptest! {
        #[test]
        fn euclidean_is_symmetric(a in (-1e3..1e3f64, -1e3..1e3f64), b in (-1e3..1e3f64, -1e3..1e3f64)) {
            prop_assert_eq!(euclidean([a.0, a.1], [b.0, b.1]), euclidean([b.0, b.1], [a.0, a.1]));
        }

        #[test]
        fn accuracy_ignores_relabeling(
            labels in prop::collection::vec((0usize..4, 0usize..4), 1..60),
            perm in Just([2usize, 0, 3, 1]).prop_shuffle(),
        ) {
            let t: Vec<usize> = labels.iter().map(|l| l.0).collect();
            let p: Vec<usize> = labels.iter().map(|l| l.1).collect();
            let q: Vec<usize> = p.iter().map(|&x| perm[x]).collect();
            let a = accuracy_rate(&t, &p).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert_eq!(a, accuracy_rate(&t, &q).unwrap());
        }

        #[test]
        fn matching_is_a_partial_bijection(
            t in prop::collection::vec((0.0..10.0f64, 0.0..10.0f64), 0..7),
            d in prop::collection::vec((0.0..10.0f64, 0.0..10.0f64), 0..7),
        ) {
            let t: Vec<Point> = t.into_iter().map(|p| [p.0, p.1]).collect();
            let d: Vec<Point> = d.into_iter().map(|p| [p.0, p.1]).collect();
            let r = match_centroids(&t, &d);
            prop_assert_eq!(r.pairs.len(), t.len().min(d.len()));
            prop_assert_eq!(r.pairs.len() + r.unmatched_true.len(), t.len());
            prop_assert_eq!(r.pairs.len() + r.unmatched_detected.len(), d.len());
            let mut seen: Vec<usize> = r.pairs.iter().map(|p| p.1).collect();
            seen.sort_unstable();
            seen.dedup();
            prop_assert_eq!(seen.len(), r.pairs.len());
            prop_assert!(r.max_distance >= r.mean_distance);
        }
    }
}
