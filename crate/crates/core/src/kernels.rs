//! Three-point kernels `K(x, y, z)` that depend only on the Gram triple
//! `(u, v, t)`.
//!
//! The semidefinite families follow Bachoc and Vallentin:
//!
//! ```text
//! Y_{m,i,j}(x,y,z) = P_i^{d+2m}(u) P_j^{d+2m}(v) Q_m(u,v,t)
//! Q_m(u,v,t)       = ((1-u^2)(1-v^2))^{m/2} P_m^{d-1}((t-uv)/sqrt((1-u^2)(1-v^2)))
//! S_{m,i,j}        = average of Y_{m,i,j} over the 6 orderings of (x,y,z)
//! ```
//!
//! `Q_m` is a polynomial in `(u, v, t)`. It is evaluated here without the
//! square root: with `s = t - uv` and `q = (1-u^2)(1-v^2)`, the scaled
//! values `R_k = q^{k/2} P_k^{d-1}(s / sqrt q)` obey
//!
//! ```text
//! R_0 = 1,  R_1 = s,
//! (k + d - 3) R_{k+1} = (2k + d - 3) s R_k - k q R_{k-1}
//! ```
//!
//! which stays finite at `|u| = 1` or `|v| = 1`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gegenbauer;
use crate::geometry::{gram_triple, GramTriple, UnitVector};

/// Eigenvalue floor accepted for PSD blocks.
pub const PSD_EIG_TOL: f64 = -1e-10;

fn check_level(m: usize, d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    if m >= 2 && d < 3 {
        return Err(Error::InvalidParameter(format!("Q_{m} needs d >= 3, got d = {d}")));
    }
    Ok(())
}

pub(crate) fn q_unchecked(m: usize, d: usize, g: GramTriple) -> f64 {
    let s = g.t - g.u * g.v;
    match m {
        0 => 1.0,
        1 => s,
        _ => {
            let q = (1.0 - g.u * g.u) * (1.0 - g.v * g.v);
            let h = (d - 1) as f64;
            let (mut prev, mut cur) = (1.0, s);
            for k in 1..m {
                let kf = k as f64;
                let next = ((2.0 * kf + h - 2.0) * s * cur - kf * q * prev) / (kf + h - 2.0);
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// `Q_m^d(u, v, t)`.
pub fn q_kernel(m: usize, d: usize, g: GramTriple) -> Result<f64> {
    check_level(m, d)?;
    Ok(q_unchecked(m, d, g))
}

/// `Y_{m,i,j}^d(u, v, t) = P_i^{d+2m}(u) P_j^{d+2m}(v) Q_m^d(u, v, t)`.
pub fn y_kernel(m: usize, i: usize, j: usize, d: usize, g: GramTriple) -> Result<f64> {
    check_level(m, d)?;
    Ok(y_unchecked(m, i, j, d, g))
}

fn y_unchecked(m: usize, i: usize, j: usize, d: usize, g: GramTriple) -> f64 {
    let h = d + 2 * m;
    gegenbauer::eval_unchecked(i, h, g.u) * gegenbauer::eval_unchecked(j, h, g.v) * q_unchecked(m, d, g)
}

/// `S_{m,i,j}^d` evaluated on a Gram triple: the mean of `Y_{m,i,j}` over
/// the six permutations of `(u, v, t)`.
///
/// Accepts any triple in `[-1, 1]^3`, Gram-feasible or not.
pub fn s_kernel_gram(m: usize, i: usize, j: usize, d: usize, g: GramTriple) -> Result<f64> {
    check_level(m, d)?;
    Ok(s_unchecked(m, i, j, d, g))
}

pub(crate) fn s_unchecked(m: usize, i: usize, j: usize, d: usize, g: GramTriple) -> f64 {
    g.permutations().iter().map(|p| y_unchecked(m, i, j, d, *p)).sum::<f64>() / 6.0
}

/// `S_{m,i,j}^d(x, y, z)`, recomputing the Gram triple for each of the
/// six orderings of the points.
pub fn s_kernel(m: usize, i: usize, j: usize, d: usize, x: &UnitVector, y: &UnitVector, z: &UnitVector) -> Result<f64> {
    check_level(m, d)?;
    if x.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: x.dim() });
    }
    let orders: [(&UnitVector, &UnitVector, &UnitVector); 6] =
        [(x, y, z), (x, z, y), (y, x, z), (y, z, x), (z, x, y), (z, y, x)];
    let mut acc = 0.0;
    for (a, b, c) in orders {
        acc += y_unchecked(m, i, j, d, gram_triple(a, b, c)?);
    }
    Ok(acc / 6.0)
}

/// `|uvt|^p`, with `0^p = 0`.
pub fn pframe_potential(p: f64, g: GramTriple) -> Result<f64> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("p-frame exponent must be positive, got {p}")));
    }
    Ok(pframe_unchecked(p, g))
}

#[inline]
fn pframe_unchecked(p: f64, g: GramTriple) -> f64 {
    let s = g.product().abs();
    if s == 0.0 {
        0.0
    } else if p == 1.0 {
        s
    } else {
        s.powf(p)
    }
}

/// One term `coef * u^a v^b t^c` of a polynomial kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub a: u32,
    pub b: u32,
    pub c: u32,
    pub coef: f64,
}

/// A finite symmetric PSD matrix attached to level `m` of a cone kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdBlock {
    pub m: usize,
    pub matrix: Vec<Vec<f64>>,
}

impl PsdBlock {
    pub fn new(m: usize, matrix: Vec<Vec<f64>>) -> Result<Self> {
        let b = Self { m, matrix };
        b.validate()?;
        Ok(b)
    }

    pub fn size(&self) -> usize {
        self.matrix.len()
    }

    /// Symmetry, PSD within [`PSD_EIG_TOL`], and for level 0 a zero first
    /// row and column.
    pub fn validate(&self) -> Result<()> {
        let n = self.size();
        let err = |reason: String| Error::InvalidBlock { level: self.m, reason };
        if self.matrix.iter().any(|r| r.len() != n) {
            return Err(err("matrix is not square".into()));
        }
        if self.matrix.iter().flatten().any(|x| !x.is_finite()) {
            return Err(err("non-finite entry".into()));
        }
        for i in 0..n {
            for j in 0..i {
                if (self.matrix[i][j] - self.matrix[j][i]).abs() > 1e-12 {
                    return Err(err(format!("not symmetric at ({i}, {j})")));
                }
            }
        }
        if self.m == 0 && n > 0 && (0..n).any(|k| self.matrix[0][k] != 0.0 || self.matrix[k][0] != 0.0) {
            return Err(err("level-0 block must vanish on its first row and column".into()));
        }
        if n > 0 {
            let min = min_eigenvalue(&self.matrix);
            if min < PSD_EIG_TOL {
                return Err(err(format!("not positive semidefinite (min eigenvalue {min})")));
            }
        }
        Ok(())
    }
}

/// Smallest eigenvalue of a symmetric matrix given as rows.
pub fn min_eigenvalue(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    if n == 0 {
        return f64::INFINITY;
    }
    let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (rows[i][j] + rows[j][i]));
    m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// The potential selected by a [`KernelSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Kernel {
    /// `|uvt|^p`.
    #[serde(rename = "pframe")]
    PFrame { p: f64 },
    /// `uvt`.
    #[serde(rename = "uvt")]
    TripleProduct,
    /// A single entry `S_{m,i,j}^d`.
    #[serde(rename = "s")]
    SEntry { m: usize, i: usize, j: usize },
    /// `sum coef * u^a v^b t^c`, symmetrized over the six permutations.
    #[serde(rename = "poly")]
    PolyUVT { monomials: Vec<Monomial> },
    /// `sum_m Tr(S_m^d A_m)`.
    #[serde(rename = "cone")]
    ConeCombination { blocks: Vec<PsdBlock> },
}

/// A kernel plus an optional dimension. Without `dim` the kernel takes the
/// dimension of whatever configuration it is applied to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    #[serde(flatten)]
    pub kernel: Kernel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
}

impl KernelSpec {
    pub fn new(kernel: Kernel) -> Self {
        Self { kernel, dim: None }
    }

    pub fn with_dim(mut self, d: usize) -> Self {
        self.dim = Some(d);
        self
    }

    pub fn pframe(p: f64) -> Self {
        Self::new(Kernel::PFrame { p })
    }

    pub fn triple_product() -> Self {
        Self::new(Kernel::TripleProduct)
    }

    pub fn s_entry(m: usize, i: usize, j: usize) -> Self {
        Self::new(Kernel::SEntry { m, i, j })
    }

    pub fn poly(monomials: Vec<Monomial>) -> Self {
        Self::new(Kernel::PolyUVT { monomials })
    }

    pub fn cone(blocks: Vec<PsdBlock>) -> Self {
        Self::new(Kernel::ConeCombination { blocks })
    }

    /// Short human-readable name.
    pub fn describe(&self) -> String {
        match &self.kernel {
            Kernel::PFrame { p } => format!("pframe(p={p})"),
            Kernel::TripleProduct => "uvt".into(),
            Kernel::SEntry { m, i, j } => format!("S_{{{m},{i},{j}}}"),
            Kernel::PolyUVT { monomials } => format!("poly({} terms)", monomials.len()),
            Kernel::ConeCombination { blocks } => format!("cone({} blocks)", blocks.len()),
        }
    }

    /// Validates the kernel for dimension `d` and returns an evaluator.
    pub fn bind(&self, d: usize) -> Result<BoundKernel> {
        if let Some(k) = self.dim {
            if k != d {
                return Err(Error::DimensionMismatch { expected: k, found: d });
            }
        }
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        let eval = match &self.kernel {
            Kernel::PFrame { p } => {
                if !(*p > 0.0) || !p.is_finite() {
                    return Err(Error::InvalidParameter(format!("p-frame exponent must be positive, got {p}")));
                }
                Eval::PFrame(*p)
            }
            Kernel::TripleProduct => Eval::TripleProduct,
            Kernel::SEntry { m, i, j } => {
                check_level(*m, d)?;
                Eval::SEntry(*m, *i, *j)
            }
            Kernel::PolyUVT { monomials } => Eval::Poly(symmetrize(monomials)),
            Kernel::ConeCombination { blocks } => {
                for b in blocks {
                    b.validate()?;
                    check_level(b.m, d)?;
                }
                Eval::Cone(blocks.iter().filter(|b| b.size() > 0).cloned().collect())
            }
        };
        Ok(BoundKernel { dim: d, eval })
    }
}

/// Averages each monomial over the six exponent permutations and merges
/// equal exponents. Returns `(a, b, c) -> coef`.
pub fn symmetrize(monomials: &[Monomial]) -> BTreeMap<(u32, u32, u32), f64> {
    let mut out: BTreeMap<(u32, u32, u32), f64> = BTreeMap::new();
    for mono in monomials {
        let (a, b, c) = (mono.a, mono.b, mono.c);
        for key in [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)] {
            *out.entry(key).or_insert(0.0) += mono.coef;
        }
    }
    out.values_mut().for_each(|c| *c /= 6.0);
    out.retain(|_, c| *c != 0.0);
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Eval {
    PFrame(f64),
    TripleProduct,
    SEntry(usize, usize, usize),
    Poly(BTreeMap<(u32, u32, u32), f64>),
    Cone(Vec<PsdBlock>),
}

/// A kernel validated for a fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundKernel {
    dim: usize,
    eval: Eval,
}

impl BoundKernel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Whether the kernel is smooth or has a smoothed surrogate the
    /// optimizer can differentiate.
    pub fn is_smoothable(&self) -> bool {
        matches!(self.eval, Eval::PFrame(_) | Eval::TripleProduct | Eval::Poly(_))
    }

    pub fn pframe_exponent(&self) -> Option<f64> {
        match self.eval {
            Eval::PFrame(p) => Some(p),
            _ => None,
        }
    }

    /// `K(u, v, t)`.
    pub fn eval(&self, g: GramTriple) -> f64 {
        match &self.eval {
            Eval::PFrame(p) => pframe_unchecked(*p, g),
            Eval::TripleProduct => g.product(),
            Eval::SEntry(m, i, j) => s_unchecked(*m, *i, *j, self.dim, g),
            Eval::Poly(coefs) => poly_eval(coefs, g),
            Eval::Cone(blocks) => cone_eval(blocks, self.dim, g),
        }
    }

    /// `K(x, y, z)`.
    pub fn eval_points(&self, x: &UnitVector, y: &UnitVector, z: &UnitVector) -> Result<f64> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.dim() });
        }
        Ok(self.eval(gram_triple(x, y, z)?))
    }

    /// Value and partials `(K, dK/du, dK/dv, dK/dt)` of the smoothed kernel.
    ///
    /// For `|s|^p` with `s = uvt` the surrogate is `(s^2 + eps^2)^{p/2}`;
    /// polynomial kernels ignore `eps`.
    pub(crate) fn smoothed_with_grad(&self, g: GramTriple, eps: f64) -> (f64, f64, f64, f64) {
        match &self.eval {
            Eval::PFrame(p) => {
                let s = g.product();
                let base = s * s + eps * eps;
                if base == 0.0 {
                    return (0.0, 0.0, 0.0, 0.0);
                }
                let val = base.powf(0.5 * p);
                let ds = p * s * val / base;
                (val, ds * g.v * g.t, ds * g.u * g.t, ds * g.u * g.v)
            }
            Eval::TripleProduct => (g.product(), g.v * g.t, g.u * g.t, g.u * g.v),
            Eval::Poly(coefs) => poly_eval_grad(coefs, g),
            Eval::SEntry(..) | Eval::Cone(_) => unreachable!("kernel is not smoothable"),
        }
    }

    pub(crate) fn smoothed(&self, g: GramTriple, eps: f64) -> f64 {
        match &self.eval {
            Eval::PFrame(p) => {
                let s = g.product();
                (s * s + eps * eps).powf(0.5 * p)
            }
            _ => self.eval(g),
        }
    }
}

fn poly_eval(coefs: &BTreeMap<(u32, u32, u32), f64>, g: GramTriple) -> f64 {
    coefs.iter().map(|(&(a, b, c), k)| k * g.u.powi(a as i32) * g.v.powi(b as i32) * g.t.powi(c as i32)).sum()
}

fn dpow(x: f64, n: u32) -> f64 {
    if n == 0 {
        0.0
    } else {
        n as f64 * x.powi(n as i32 - 1)
    }
}

fn poly_eval_grad(coefs: &BTreeMap<(u32, u32, u32), f64>, g: GramTriple) -> (f64, f64, f64, f64) {
    let mut out = (0.0, 0.0, 0.0, 0.0);
    for (&(a, b, c), k) in coefs {
        let (pu, pv, pt) = (g.u.powi(a as i32), g.v.powi(b as i32), g.t.powi(c as i32));
        out.0 += k * pu * pv * pt;
        out.1 += k * dpow(g.u, a) * pv * pt;
        out.2 += k * pu * dpow(g.v, b) * pt;
        out.3 += k * pu * pv * dpow(g.t, c);
    }
    out
}

fn cone_eval(blocks: &[PsdBlock], d: usize, g: GramTriple) -> f64 {
    let mut total = 0.0;
    for perm in g.permutations() {
        for b in blocks {
            let h = d + 2 * b.m;
            let n = b.size();
            let pu = gegenbauer::all_unchecked(n - 1, h, perm.u);
            let pv = gegenbauer::all_unchecked(n - 1, h, perm.v);
            let q = q_unchecked(b.m, d, perm);
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    acc += b.matrix[i][j] * pu[i] * pv[j];
                }
            }
            total += acc * q;
        }
    }
    total / 6.0
}

/// `sum_m Tr(S_m^d(x, y, z) A_m)` for a cone kernel.
pub fn cone_kernel_eval(blocks: &[PsdBlock], d: usize, x: &UnitVector, y: &UnitVector, z: &UnitVector) -> Result<f64> {
    KernelSpec::cone(blocks.to_vec()).bind(d)?.eval_points(x, y, z)
}
