//! Random points and configurations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::geometry::{UnitVector, WeightedConfig};

/// A point drawn uniformly from `S^{d-1}` (normalized Gaussian).
pub fn random_unit<R: Rng + ?Sized>(d: usize, rng: &mut R) -> UnitVector {
    loop {
        let c: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        if let Ok(u) = UnitVector::new(c) {
            return u;
        }
    }
}

/// `n` i.i.d. uniform points on `S^{d-1}`. With `random_weights` the
/// weights are drawn uniformly from `(0.05, 1)` and normalized, otherwise
/// they are `1/n`.
pub fn random_config(d: usize, n: usize, random_weights: bool, seed: u64) -> WeightedConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_config_with(d, n, random_weights, &mut rng)
}

pub fn random_config_with<R: Rng + ?Sized>(d: usize, n: usize, random_weights: bool, rng: &mut R) -> WeightedConfig {
    let points: Vec<UnitVector> = (0..n).map(|_| random_unit(d, rng)).collect();
    let weights: Vec<f64> = if random_weights {
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / s).collect()
    } else {
        vec![1.0 / n as f64; n]
    };
    WeightedConfig::new(points, weights).expect("random configuration is valid")
}

/// A random unit tangent vector at `x`.
pub fn random_tangent<R: Rng + ?Sized>(x: &UnitVector, rng: &mut R) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..x.dim()).map(|_| StandardNormal.sample(rng)).collect();
        let proj = crate::geometry::dot(&g, x.coords());
        let v: Vec<f64> = g.iter().zip(x.coords()).map(|(a, b)| a - proj * b).collect();
        let n = crate::geometry::norm(&v);
        if n > 1e-8 {
            return v.into_iter().map(|c| c / n).collect();
        }
    }
}
