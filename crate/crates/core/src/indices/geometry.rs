use crate::clustering::sq_dist;
use crate::Point;

fn cross(o: &Point, a: &Point, b: &Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Convex hull vertices (monotone chain).
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for p in iter {
            while hull.len() >= start + 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    hull
}

/// Largest distance between two points of the set.
pub fn diameter(points: &[Point]) -> f64 {
    let hull = convex_hull(points);
    let mut best: f64 = 0.0;
    for i in 0..hull.len() {
        for j in i + 1..hull.len() {
            best = best.max(sq_dist(&hull[i], &hull[j]));
        }
    }
    best.sqrt()
}

/// Smallest distance between a point of `a` and a point of `b`; both must
/// be sorted by x.
pub fn min_distance(a: &[Point], b: &[Point]) -> f64 {
    let mut best = f64::INFINITY;
    for p in a {
        let lo = b.partition_point(|q| q[0] < p[0] - best);
        for q in &b[lo..] {
            let dx = q[0] - p[0];
            if dx > best {
                break;
            }
            best = best.min(sq_dist(p, q).sqrt());
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_hull_and_diameter() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5], [0.5, 0.0]];
        assert_eq!(convex_hull(&pts).len(), 4);
        assert!((diameter(&pts) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(diameter(&[[3.0, 3.0]]), 0.0);
        assert_eq!(diameter(&[[0.0, 0.0], [0.0, 2.0], [0.0, 1.0]]), 2.0);
    }

    #[test]
    fn min_distance_between_sorted_sets() {
        let a = [[0.0, 0.0], [1.0, 5.0]];
        let b = [[1.0, 1.0], [4.0, 5.0]];
        assert!((min_distance(&a, &b) - 2f64.sqrt()).abs() < 1e-15);
    }
}
