//! Canonical configurations and the isotropic lifting map
//!
//! ```text
//! f(x) = sqrt(d/(d+1)) x + z/sqrt(d+1),   S^{d-1} -> S^d
//! ```
//!
//! which sends balanced isotropic measures on `S^{d-1}` to isotropic
//! measures on `S^d` (and nothing else does). Inner products transport as
//! `<f(x), f(y)> = (d <x,y> + 1) / (d + 1)`.

use crate::error::{Error, Result};
use crate::geometry::{dot, UnitVector, WeightedConfig};

/// A measure to lift together with the pole `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftSpec {
    pub source: WeightedConfig,
    /// A unit vector of `R^{d+1}`. `None` means `e_{d+1}`.
    pub pole: Option<UnitVector>,
}

impl LiftSpec {
    pub fn new(source: WeightedConfig) -> Self {
        Self { source, pole: None }
    }

    pub fn with_pole(source: WeightedConfig, pole: UnitVector) -> Self {
        Self { source, pole: Some(pole) }
    }
}

/// Pushes the source measure forward under `f`, keeping the weights.
///
/// Source points are embedded in the first `d` coordinates of `R^{d+1}`.
pub fn lift(spec: &LiftSpec) -> Result<WeightedConfig> {
    let d = spec.source.dim();
    let pole = match &spec.pole {
        Some(p) => {
            if p.dim() != d + 1 {
                return Err(Error::DimensionMismatch { expected: d + 1, found: p.dim() });
            }
            p.clone()
        }
        None => UnitVector::basis(d + 1, d)?,
    };
    let a = (d as f64 / (d + 1) as f64).sqrt();
    let b = 1.0 / ((d + 1) as f64).sqrt();
    let mut points = Vec::with_capacity(spec.source.len());
    for x in spec.source.points() {
        let mut e = x.coords().to_vec();
        e.push(0.0);
        let ip = dot(&e, pole.coords());
        if ip.abs() > 1e-12 {
            return Err(Error::PoleNotOrthogonal(ip));
        }
        let coords: Vec<f64> = e.iter().zip(pole.coords()).map(|(xi, zi)| a * xi + b * zi).collect();
        points.push(UnitVector::new(coords)?);
    }
    WeightedConfig::new(points, spec.source.weights().to_vec())
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        Err(Error::InvalidDimension(d))
    } else {
        Ok(())
    }
}

/// `e_1, ..., e_d` with weight `1/d`.
pub fn gen_orthonormal_basis(d: usize) -> Result<WeightedConfig> {
    check_dim(d)?;
    WeightedConfig::uniform((0..d).map(|i| UnitVector::basis(d, i)).collect::<Result<_>>()?)
}

/// `+-e_1, ..., +-e_d` with weight `1/(2d)`, ordered `e_1, -e_1, e_2, ...`.
pub fn gen_crosspolytope(d: usize) -> Result<WeightedConfig> {
    check_dim(d)?;
    let mut pts = Vec::with_capacity(2 * d);
    for i in 0..d {
        let e = UnitVector::basis(d, i)?;
        pts.push(e.neg());
        pts.insert(pts.len() - 1, e);
    }
    WeightedConfig::uniform(pts)
}

/// The `d + 1` vertices of a regular simplex inscribed in `S^{d-1}`, all
/// pairwise inner products `-1/d`, weight `1/(d+1)`.
///
/// Built from `e_1, ..., e_d` and `alpha (1, ..., 1)` with
/// `alpha = (1 - sqrt(d+1))/d`, which are pairwise at distance `sqrt 2`,
/// then centered and normalized.
pub fn gen_simplex(d: usize) -> Result<WeightedConfig> {
    check_dim(d)?;
    let df = d as f64;
    let alpha = (1.0 - (df + 1.0).sqrt()) / df;
    let centroid = (1.0 + alpha) / (df + 1.0);
    let mut pts = Vec::with_capacity(d + 1);
    for i in 0..=d {
        let coords: Vec<f64> = (0..d)
            .map(|k| {
                let raw = if i == d {
                    alpha
                } else if k == i {
                    1.0
                } else {
                    0.0
                };
                raw - centroid
            })
            .collect();
        pts.push(UnitVector::new(coords)?);
    }
    WeightedConfig::uniform(pts)
}

/// Two orthonormal bases of the plane, the second rotated by `theta`,
/// with weights `(lambda/2, lambda/2, (1-lambda)/2, (1-lambda)/2)`.
pub fn gen_two_bases(theta: f64, lambda: f64) -> Result<WeightedConfig> {
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&theta) {
        return Err(Error::InvalidParameter(format!("theta = {theta} outside [0, pi/2]")));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} outside [0, 1]")));
    }
    let (s, c) = theta.sin_cos();
    let pts = vec![
        UnitVector::from_normalized(vec![1.0, 0.0]),
        UnitVector::from_normalized(vec![0.0, 1.0]),
        UnitVector::new(vec![c, s])?,
        UnitVector::new(vec![-s, c])?,
    ];
    let a = lambda / 2.0;
    let b = (1.0 - lambda) / 2.0;
    WeightedConfig::new(pts, vec![a, a, b, b])
}
