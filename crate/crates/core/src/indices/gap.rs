use rand::Rng;

use crate::clustering::Clusterer;
use crate::datagen::bounds;
use crate::seed::{derive_seed, rng};
use crate::{Error, Point, Result};

pub const DEFAULT_B_REFS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapResult {
    pub gap: f64,
    pub std_err: f64,
}

/// Within-cluster sum of squared distances to the member means.
pub fn dispersion(points: &[Point], assignments: &[usize]) -> f64 {
    let k = assignments.iter().max().map_or(0, |&m| m + 1);
    let mut sums = vec![[0.0; 2]; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in points.iter().zip(assignments) {
        sums[a][0] += p[0];
        sums[a][1] += p[1];
        counts[a] += 1;
    }
    let means: Vec<Point> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| [s[0] / c.max(1) as f64, s[1] / c.max(1) as f64])
        .collect();
    points
        .iter()
        .zip(assignments)
        .map(|(p, &a)| (p[0] - means[a][0]).powi(2) + (p[1] - means[a][1]).powi(2))
        .sum()
}

/// Reference dataset `b` for `seed`: `n` points uniform over the box.
pub fn reference_points(n: usize, lo: Point, hi: Point, seed: u64, b: usize) -> Vec<Point> {
    let mut r = rng(derive_seed(seed, b as u64 + 1));
    let mut coord = |l: f64, h: f64| if h > l { r.random_range(l..h) } else { l };
    (0..n).map(|_| [coord(lo[0], hi[0]), coord(lo[1], hi[1])]).collect()
}

/// Seed the clusterer receives for reference dataset `b`.
pub fn reference_cluster_seed(seed: u64, b: usize) -> u64 {
    derive_seed(derive_seed(seed, b as u64 + 1), 0)
}

/// Gap statistic at `k` against `b_refs` uniform references over the data
/// bounding box.
///
/// `gap = mean_b ln W_ref_b - ln W` and
/// `std_err = sd_b(ln W_ref_b) * sqrt(1 + 1 / b_refs)`, with `W` the
/// [`dispersion`] of the clusterer's partition. The data is clustered with
/// `seed` itself.
pub fn gap_statistic(points: &[Point], k: usize, clusterer: &dyn Clusterer, b_refs: usize, seed: u64) -> Result<GapResult> {
    if k == 0 || b_refs == 0 {
        return Err(Error::InvalidConfig("k and b_refs must be at least 1".into()));
    }
    if points.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let fit = clusterer.cluster(points, k, seed)?;
    let w = dispersion(points, &fit.assignments);
    if !(w > 0.0) {
        return Err(Error::DegenerateDispersion);
    }
    let (lo, hi) = bounds(points);
    let mut logs = Vec::with_capacity(b_refs);
    for b in 0..b_refs {
        let refs = reference_points(points.len(), lo, hi, seed, b);
        let fit = clusterer.cluster(&refs, k, reference_cluster_seed(seed, b))?;
        let w_ref = dispersion(&refs, &fit.assignments);
        if !(w_ref > 0.0) {
            return Err(Error::DegenerateDispersion);
        }
        logs.push(w_ref.ln());
    }
    let m = b_refs as f64;
    let mean = logs.iter().sum::<f64>() / m;
    let sd = (logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / m).sqrt();
    Ok(GapResult {
        gap: mean - w.ln(),
        std_err: sd * (1.0 + 1.0 / m).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::KMeansClusterer;
    use crate::datagen::{generate, GeneratorConfig, ShapeFamily};
    use crate::indices::{estimate_k, IndexKind};

    #[test]
    fn uniform_data_has_no_gap_at_one() {
        let ds = generate(&GeneratorConfig::new(ShapeFamily::NoStructure, 1, 2000, 4)).unwrap();
        let g = gap_statistic(&ds.points, 1, &KMeansClusterer::default(), 10, 8).unwrap();
        assert!(g.gap.abs() <= 3.0 * g.std_err, "{g:?}");
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let ds = generate(&GeneratorConfig::blobs(3, 300, 2)).unwrap();
        let c = KMeansClusterer::default();
        let a = gap_statistic(&ds.points, 3, &c, 10, 5).unwrap();
        let b = gap_statistic(&ds.points, 3, &c, 10, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn identical_points_are_degenerate() {
        let pts = vec![[2.0, 2.0]; 20];
        let err = gap_statistic(&pts, 1, &KMeansClusterer::default(), 5, 0).unwrap_err();
        assert!(matches!(err, Error::DegenerateDispersion));
    }

    #[test]
    fn three_blobs_select_three() {
        let ds = generate(&GeneratorConfig::blobs(3, 1500, 21).with_separation(10.0)).unwrap();
        let rep = estimate_k(&ds.points, IndexKind::GapStatistic, 6, &KMeansClusterer::default(), 1).unwrap();
        assert_eq!(rep.k_selected, 3, "{:?}", rep.values);
        assert_eq!(rep.std_errs.len(), rep.values.len());
    }
}
