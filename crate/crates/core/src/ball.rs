//! Exact Euclidean smallest enclosing ball in `R^d` (Welzl, move-to-front).

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
struct Ball {
    center: DVector<f64>,
    radius2: f64,
}

impl Ball {
    fn contains(&self, p: &DVector<f64>) -> bool {
        (p - &self.center).norm_squared() <= self.radius2 * (1.0 + 1e-12) + 1e-14
    }
}

/// Ball through all points of `boundary`, centered in their affine hull.
fn circumball(boundary: &[DVector<f64>], dim: usize) -> Ball {
    match boundary {
        [] => Ball { center: DVector::zeros(dim), radius2: -1.0 },
        [p] => Ball { center: p.clone(), radius2: 0.0 },
        [p0, rest @ ..] => {
            let k = rest.len();
            let diffs: Vec<DVector<f64>> = rest.iter().map(|p| p - p0).collect();
            let mut m = DMatrix::zeros(k, k);
            let mut b = DVector::zeros(k);
            for i in 0..k {
                for j in 0..k {
                    m[(i, j)] = 2.0 * diffs[i].dot(&diffs[j]);
                }
                b[i] = diffs[i].norm_squared();
            }
            // Affinely dependent boundaries fall back to the least-squares center.
            let lambda = m
                .clone()
                .lu()
                .solve(&b)
                .filter(|l| l.iter().all(|x| x.is_finite()))
                .unwrap_or_else(|| m.svd(true, true).solve(&b, 1e-14).unwrap_or_else(|_| DVector::zeros(k)));
            let mut center = p0.clone();
            for (l, dv) in lambda.iter().zip(&diffs) {
                center += dv * *l;
            }
            let radius2 = boundary.iter().map(|p| (p - &center).norm_squared()).fold(0.0, f64::max);
            Ball { center, radius2 }
        }
    }
}

fn move_to_front(pts: &mut [DVector<f64>], end: usize, boundary: &mut Vec<DVector<f64>>, dim: usize) -> Ball {
    let mut ball = circumball(boundary, dim);
    if boundary.len() == dim + 1 {
        return ball;
    }
    for i in 0..end {
        if !ball.contains(&pts[i]) {
            boundary.push(pts[i].clone());
            ball = move_to_front(pts, i, boundary, dim);
            boundary.pop();
            pts[..=i].rotate_right(1);
        }
    }
    ball
}

/// Returns `(center, radius)` of the smallest ball containing `points`.
///
/// Panics on an empty slice.
pub fn smallest_enclosing_ball(points: &[DVector<f64>]) -> (DVector<f64>, f64) {
    assert!(!points.is_empty(), "smallest_enclosing_ball of no points");
    let dim = points[0].len();
    let mut pts = points.to_vec();
    let n = pts.len();
    let mut boundary = Vec::with_capacity(dim + 1);
    let ball = move_to_front(&mut pts, n, &mut boundary, dim);
    (ball.center, ball.radius2.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(c: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(c)
    }

    #[test]
    fn two_points() {
        let (c, r) = smallest_enclosing_ball(&[v(&[0.0, 0.0]), v(&[2.0, 0.0])]);
        assert!((c - v(&[1.0, 0.0])).norm() < 1e-12);
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interior_point_ignored() {
        let pts = [v(&[-1.0, 0.0]), v(&[1.0, 0.0]), v(&[0.0, 0.5]), v(&[0.0, -0.2])];
        let (c, r) = smallest_enclosing_ball(&pts);
        assert!(c.norm() < 1e-12);
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn obtuse_triangle_uses_long_edge() {
        let pts = [v(&[-1.0, 0.0]), v(&[1.0, 0.0]), v(&[0.0, 0.1])];
        let (c, r) = smallest_enclosing_ball(&pts);
        assert!(c.norm() < 1e-12);
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duplicates_and_collinear() {
        let pts = [v(&[0.0, 0.0, 0.0]), v(&[1.0, 1.0, 1.0]), v(&[0.5, 0.5, 0.5]), v(&[1.0, 1.0, 1.0])];
        let (c, r) = smallest_enclosing_ball(&pts);
        assert!((c - v(&[0.5, 0.5, 0.5])).norm() < 1e-12);
        assert!((r - 0.75f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn contains_all_points_on_random_cloud() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for d in 2..6 {
            let pts: Vec<_> = (0..40).map(|_| DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0))).collect();
            let (c, r) = smallest_enclosing_ball(&pts);
            let on_boundary = pts.iter().filter(|p| ((*p - &c).norm() - r).abs() < 1e-9).count();
            assert!(pts.iter().all(|p| (p - &c).norm() <= r + 1e-9));
            assert!(on_boundary >= 2);
        }
    }
}
