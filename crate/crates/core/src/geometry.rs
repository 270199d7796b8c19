//! Points on the sphere, weighted configurations and spherical metric
//! diagnostics.
//!
//! A [`WeightedConfig`] is a discrete probability measure on `S^{d-1}`.
//! Uniform weights encode a plain point set. Configurations are immutable
//! once validated, so verifiers can share them freely across threads.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Norm deviation accepted (and silently corrected) when ingesting points.
pub const INGEST_NORM_TOL: f64 = 1e-6;
/// Weights below this are outside the support.
pub const SUPPORT_WEIGHT_EPS: f64 = 1e-15;
/// Norms within this of one are rounding noise and left untouched.
const UNIT_EXACT_TOL: f64 = 4.0 * f64::EPSILON;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine clamped to `[-1, 1]`.
#[inline]
pub fn clamp_cos(c: f64) -> f64 {
    c.clamp(-1.0, 1.0)
}

/// A point of `S^{d-1}`, `d >= 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    /// Normalizes `coords`. Fails on `d < 2` or a (near) zero vector.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidDimension(coords.len()));
        }
        let n = norm(&coords);
        if !(n.is_finite() && n > 1e-300) {
            return Err(Error::OffSphere { index: 0, norm: n });
        }
        if (n - 1.0).abs() <= UNIT_EXACT_TOL {
            return Ok(Self(coords));
        }
        Ok(Self(coords.into_iter().map(|c| c / n).collect()))
    }

    /// The `i`-th standard basis vector of `R^d`.
    pub fn basis(d: usize, i: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        if i >= d {
            return Err(Error::InvalidParameter(format!("basis index {i} >= {d}")));
        }
        let mut c = vec![0.0; d];
        c[i] = 1.0;
        Ok(Self(c))
    }

    pub(crate) fn from_normalized(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &UnitVector) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn neg(&self) -> UnitVector {
        Self(self.0.iter().map(|c| -c).collect())
    }
}

/// The pairwise inner products of a point triple `(x, y, z)`:
/// `u = <y,z>`, `v = <x,z>`, `t = <x,y>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GramTriple {
    pub u: f64,
    pub v: f64,
    pub t: f64,
}

impl GramTriple {
    pub const fn new(u: f64, v: f64, t: f64) -> Self {
        Self { u, v, t }
    }

    pub fn product(&self) -> f64 {
        self.u * self.v * self.t
    }

    /// The six triples obtained by permuting the three points. Permuting
    /// points permutes `(u, v, t)` the same way.
    pub fn permutations(&self) -> [GramTriple; 6] {
        let GramTriple { u, v, t } = *self;
        [
            GramTriple::new(u, v, t),
            GramTriple::new(u, t, v),
            GramTriple::new(v, u, t),
            GramTriple::new(v, t, u),
            GramTriple::new(t, u, v),
            GramTriple::new(t, v, u),
        ]
    }
}

/// Gram triple of `(x, y, z)`, each entry clamped to `[-1, 1]`.
pub fn gram_triple(x: &UnitVector, y: &UnitVector, z: &UnitVector) -> Result<GramTriple> {
    let d = x.dim();
    for p in [y, z] {
        if p.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: p.dim() });
        }
    }
    Ok(GramTriple::new(clamp_cos(y.dot(z)), clamp_cos(x.dot(z)), clamp_cos(x.dot(y))))
}

/// On-disk configuration as parsed from JSON, before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawConfig {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

/// A discrete probability measure on `S^{d-1}`.
///
/// Duplicate points are allowed and kept as separate atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedConfig {
    dim: usize,
    points: Vec<UnitVector>,
    weights: Vec<f64>,
}

impl WeightedConfig {
    /// Builds a configuration from already-unit points and weights.
    ///
    /// Weights must be nonnegative and sum to one
    /// within `1e-6`, after which they are rescaled to sum to one exactly.
    pub fn new(points: Vec<UnitVector>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty);
        }
        if points.len() != weights.len() {
            return Err(Error::LengthMismatch(points.len(), weights.len()));
        }
        let dim = points[0].dim();
        for p in &points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: p.dim() });
            }
        }
        for (index, &w) in weights.iter().enumerate() {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::NegativeWeight { index, value: w });
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > INGEST_NORM_TOL {
            return Err(Error::WeightSum(sum));
        }
        let weights = if (sum - 1.0).abs() > 1e-15 { weights.into_iter().map(|w| w / sum).collect() } else { weights };
        Ok(Self { dim, points, weights })
    }

    /// Uniform weights `1/N`.
    pub fn uniform(points: Vec<UnitVector>) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::Empty);
        }
        Self::new(points, vec![1.0 / n as f64; n])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[UnitVector] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Whether all weights are equal to `1/N` within `tol`.
    pub fn is_uniform(&self, tol: f64) -> bool {
        let w = 1.0 / self.len() as f64;
        self.weights.iter().all(|x| (x - w).abs() <= tol)
    }

    /// Indices of atoms with weight above [`SUPPORT_WEIGHT_EPS`].
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.weights[i] > SUPPORT_WEIGHT_EPS).collect()
    }

    /// The full `N x N` Gram matrix, entries clamped to `[-1, 1]`.
    pub fn gram(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut g = vec![vec![0.0; n]; n];
        for i in 0..n {
            g[i][i] = 1.0;
            for j in (i + 1)..n {
                let c = clamp_cos(self.points[i].dot(&self.points[j]));
                g[i][j] = c;
                g[j][i] = c;
            }
        }
        g
    }

    /// Merges atoms closer than `dist` in Euclidean distance, adding their
    /// weights. Zero-weight atoms are dropped first.
    pub fn merge_duplicates(&self, dist: f64) -> WeightedConfig {
        let mut points: Vec<UnitVector> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for i in self.support() {
            let p = &self.points[i];
            let hit = points.iter().position(|q| {
                let d2: f64 = p.coords().iter().zip(q.coords()).map(|(a, b)| (a - b) * (a - b)).sum();
                d2.sqrt() <= dist
            });
            match hit {
                Some(k) => weights[k] += self.weights[i],
                None => {
                    points.push(p.clone());
                    weights.push(self.weights[i]);
                }
            }
        }
        WeightedConfig { dim: self.dim, points, weights }
    }

    /// Replaces point `i` by its antipode.
    pub fn with_negated(&self, i: usize) -> WeightedConfig {
        let mut out = self.clone();
        out.points[i] = out.points[i].neg();
        out
    }

    /// Reorders atoms by `perm` (a permutation of `0..N`).
    pub fn permuted(&self, perm: &[usize]) -> WeightedConfig {
        WeightedConfig {
            dim: self.dim,
            points: perm.iter().map(|&i| self.points[i].clone()).collect(),
            weights: perm.iter().map(|&i| self.weights[i]).collect(),
        }
    }

    pub fn to_raw(&self) -> RawConfig {
        RawConfig {
            dim: self.dim,
            points: self.points.iter().map(|p| p.coords().to_vec()).collect(),
            weights: Some(self.weights.clone()),
        }
    }

    pub(crate) fn from_parts_unchecked(dim: usize, points: Vec<UnitVector>, weights: Vec<f64>) -> Self {
        Self { dim, points, weights }
    }
}

/// Validates a parsed configuration file.
///
/// Near-unit points (norm within `1e-6` of one) are renormalized, anything
/// further off is rejected. Missing weights default to `1/N`.
pub fn validate_config(raw: &RawConfig) -> Result<WeightedConfig> {
    if raw.dim < 2 {
        return Err(Error::InvalidDimension(raw.dim));
    }
    if raw.points.is_empty() {
        return Err(Error::Empty);
    }
    let mut points = Vec::with_capacity(raw.points.len());
    for (index, p) in raw.points.iter().enumerate() {
        if p.len() != raw.dim {
            return Err(Error::DimensionMismatch { expected: raw.dim, found: p.len() });
        }
        let n = norm(p);
        if !n.is_finite() || (n - 1.0).abs() > INGEST_NORM_TOL {
            return Err(Error::OffSphere { index, norm: n });
        }
        let coords = if (n - 1.0).abs() <= UNIT_EXACT_TOL { p.clone() } else { p.iter().map(|c| c / n).collect() };
        points.push(UnitVector::from_normalized(coords));
    }
    let weights = match &raw.weights {
        Some(w) => {
            if w.len() != points.len() {
                return Err(Error::LengthMismatch(points.len(), w.len()));
            }
            w.clone()
        }
        None => vec![1.0 / points.len() as f64; points.len()],
    };
    WeightedConfig::new(points, weights)
}

/// Largest geodesic distance between two support points, in radians.
pub fn spherical_diameter(cfg: &WeightedConfig) -> Result<f64> {
    let support = cfg.support();
    if support.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, found: support.len() });
    }
    let pts = cfg.points();
    let mut min_cos = f64::INFINITY;
    for (a, &i) in support.iter().enumerate() {
        for &j in &support[a + 1..] {
            min_cos = min_cos.min(clamp_cos(pts[i].dot(&pts[j])));
        }
    }
    Ok(min_cos.acos())
}

/// Smallest spherical cap containing the support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapReport {
    pub center: UnitVector,
    /// Geodesic radius in radians.
    pub radius: f64,
    /// Support indices lying on the boundary of the cap.
    pub attained_at: Vec<usize>,
}

/// Smallest enclosing spherical cap, via the Euclidean smallest enclosing
/// ball of the support with its center pushed back onto the sphere.
///
/// Valid when the support lies in an open hemisphere; otherwise the ball's
/// center is (numerically) the origin and [`Error::NoCap`] is returned.
pub fn min_enclosing_cap(cfg: &WeightedConfig) -> Result<CapReport> {
    let support = cfg.support();
    let pts: Vec<DVector<f64>> =
        support.iter().map(|&i| DVector::from_column_slice(cfg.points()[i].coords())).collect();
    let (center, _) = crate::ball::smallest_enclosing_ball(&pts);
    let cn = center.norm();
    if cn < 1e-9 {
        return Err(Error::NoCap);
    }
    let c = UnitVector::from_normalized((center / cn).iter().copied().collect());
    let angles: Vec<f64> = support.iter().map(|&i| clamp_cos(cfg.points()[i].dot(&c)).acos()).collect();
    let radius = angles.iter().copied().fold(0.0, f64::max);
    if radius >= std::f64::consts::FRAC_PI_2 - 1e-12 {
        // A cap of radius >= pi/2 means no open hemisphere holds the support.
        return Err(Error::NoCap);
    }
    let attained_at = support.iter().zip(&angles).filter(|(_, &a)| a >= radius - 1e-9).map(|(&i, _)| i).collect();
    Ok(CapReport { center: c, radius, attained_at })
}

/// `sum_i w_i x_i` as a vector.
pub fn center_of_mass(cfg: &WeightedConfig) -> DVector<f64> {
    let mut c = DVector::zeros(cfg.dim());
    for (p, &w) in cfg.points().iter().zip(cfg.weights()) {
        c += DVector::from_column_slice(p.coords()) * w;
    }
    c
}

pub(crate) fn outer_sum(cfg: &WeightedConfig) -> DMatrix<f64> {
    let d = cfg.dim();
    let mut a = DMatrix::zeros(d, d);
    for (p, &w) in cfg.points().iter().zip(cfg.weights()) {
        let x = p.coords();
        for k in 0..d {
            for l in k..d {
                a[(k, l)] += w * x[k] * x[l];
            }
        }
    }
    for k in 0..d {
        for l in 0..k {
            a[(k, l)] = a[(l, k)];
        }
    }
    a
}
