//! Verifiers for the checkable statements about three-point energies:
//! polynomial certificate identities, positive semidefiniteness of
//! `S_m^d(mu)`, isotropy and balance, tight frames, three-point packing
//! conditions, nearly orthogonal structure and the rigidity of
//! non-obtuse and simplex-like isotropic measures.
//!
//! Every check returns a [`CertReport`] whose `passed` flag is exactly
//! `max_residual <= tolerance`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{moment_matrix, s_moment_matrix, two_point_frame_energy, CompensatedSum};
use crate::error::{Error, Result};
use crate::geometry::{center_of_mass, WeightedConfig};
use crate::kernels::{min_eigenvalue, s_kernel_gram};
use crate::GramTriple;

/// Euclidean distance below which two atoms count as the same point.
pub const DISTINCT_DIST: f64 = 1e-9;
/// Default tolerance for calling an inner product zero.
pub const ORTHO_TOL: f64 = 1e-6;
/// Default isotropy tolerance.
pub const ISOTROPY_TOL: f64 = 1e-9;
/// Floor on eigenvalues of `S_m^d(mu)`.
pub const PSD_TOL: f64 = 1e-8;
/// Residual bound for the polynomial certificate identities.
pub const IDENTITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    /// Atom indices into the checked configuration.
    Indices(Vec<usize>),
    /// A sample `(u, v, t)`.
    Sample([f64; 3]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub name: String,
    pub passed: bool,
    pub max_residual: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub tolerance: f64,
}

impl CertReport {
    pub fn new(name: impl Into<String>, max_residual: f64, tolerance: f64, witness: Option<Witness>) -> Self {
        Self { name: name.into(), passed: max_residual <= tolerance, max_residual, witness, tolerance }
    }
}

/// Both sides of the two packing-certificate identities at `(u, v, t)`:
///
/// ```text
/// 6 (d-1)^2/d^2 S_{0,2,2} = 2(u^2v^2+u^2t^2+v^2t^2) - (4/d)(u^2+v^2+t^2) + 6/d^2
/// 6 S_{1,1,1}             = 6uvt - 2(u^2v^2+u^2t^2+v^2t^2)
/// ```
///
/// Left sides go through the general kernel machinery.
pub fn rosen_identity_sides(d: usize, g: GramTriple) -> Result<[(f64, f64); 2]> {
    let df = d as f64;
    let (u, v, t) = (g.u, g.v, g.t);
    let sq = u * u * v * v + u * u * t * t + v * v * t * t;
    let lhs1 = 6.0 * (df - 1.0).powi(2) / (df * df) * s_kernel_gram(0, 2, 2, d, g)?;
    let rhs1 = 2.0 * sq - 4.0 / df * (u * u + v * v + t * t) + 6.0 / (df * df);
    let lhs2 = 6.0 * s_kernel_gram(1, 1, 1, d, g)?;
    let rhs2 = 6.0 * u * v * t - 2.0 * sq;
    Ok([(lhs1, rhs1), (lhs2, rhs2)])
}

/// Both sides of
/// `uvt = (d-1)^2/d^2 S_{0,2,2} + S_{1,1,1} + (2/(3d))(u^2+v^2+t^2) - 1/d^2`,
/// returned as `(uvt, right side)`.
pub fn uvt_identity_sides(d: usize, g: GramTriple) -> Result<(f64, f64)> {
    let df = d as f64;
    let (u, v, t) = (g.u, g.v, g.t);
    let rhs = (df - 1.0).powi(2) / (df * df) * s_kernel_gram(0, 2, 2, d, g)?
        + s_kernel_gram(1, 1, 1, d, g)?
        + 2.0 / (3.0 * df) * (u * u + v * v + t * t)
        - 1.0 / (df * df);
    Ok((u * v * t, rhs))
}

fn sample_identity<F>(name: &str, d: usize, n_samples: usize, seed: u64, residual: F) -> Result<CertReport>
where
    F: Fn(GramTriple) -> Result<f64>,
{
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = (0.0, [0.0; 3]);
    for _ in 0..n_samples {
        let s: [f64; 3] = [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)];
        let r = residual(GramTriple::new(s[0], s[1], s[2]))?;
        if !(r <= worst.0) {
            worst = (r, s);
        }
    }
    Ok(CertReport::new(name, worst.0, IDENTITY_TOL, Some(Witness::Sample(worst.1))))
}

/// Evaluates both packing-certificate identities at `n_samples` points of
/// the cube `[-1, 1]^3`.
pub fn check_identity_rosen(d: usize, n_samples: usize, seed: u64) -> Result<CertReport> {
    sample_identity("identity-rosen", d, n_samples, seed, |g| {
        let [(a, b), (c, e)] = rosen_identity_sides(d, g)?;
        Ok((a - b).abs().max((c - e).abs()))
    })
}

/// Evaluates the `uvt` decomposition at `n_samples` points of `[-1, 1]^3`.
pub fn check_identity_uvt(d: usize, n_samples: usize, seed: u64) -> Result<CertReport> {
    sample_identity("identity-uvt", d, n_samples, seed, |g| {
        let (a, b) = uvt_identity_sides(d, g)?;
        Ok((a - b).abs())
    })
}

/// Minimum eigenvalue of the leading `size x size` blocks of `S_m^d(mu)`
/// over `m <= m_max`.
pub fn psd_check(cfg: &WeightedConfig, m_max: usize, size: usize) -> Result<CertReport> {
    psd_check_impl(cfg, m_max, size, false)
}

pub(crate) fn psd_check_impl(cfg: &WeightedConfig, m_max: usize, size: usize, negate: bool) -> Result<CertReport> {
    let mut worst = (f64::INFINITY, 0);
    for m in 0..=m_max {
        let mut s = s_moment_matrix(cfg, m, size)?;
        if negate {
            s.iter_mut().flatten().for_each(|x| *x = -*x);
        }
        let e = min_eigenvalue(&s);
        if e < worst.0 {
            worst = (e, m);
        }
    }
    Ok(CertReport::new(
        format!("psd(m<={m_max}, size={size})"),
        (-worst.0).max(0.0),
        PSD_TOL,
        Some(Witness::Indices(vec![worst.1])),
    ))
}

/// `||A - I/d||_F` for the second-moment matrix `A`.
pub fn check_isotropic(cfg: &WeightedConfig, tol: f64) -> CertReport {
    CertReport::new("isotropic", moment_matrix(cfg).isotropy_residual(), tol, None)
}

/// `||sum_i w_i x_i||`.
pub fn check_balanced(cfg: &WeightedConfig, tol: f64) -> CertReport {
    CertReport::new("balanced", center_of_mass(cfg).norm(), tol, None)
}

/// Frame-energy equality. For uniform weights the residual is
/// `|sum_{i,j} <x_i,x_j>^2 - N^2/d|`, otherwise `|E_2(mu) - 1/d|`.
pub fn check_tight_frame(cfg: &WeightedConfig, tol: f64) -> CertReport {
    let d = cfg.dim() as f64;
    let e2 = two_point_frame_energy(cfg, 2.0).expect("p = 2 is valid");
    let residual = if cfg.is_uniform(1e-12) {
        let n = cfg.len() as f64;
        (e2 * n * n - n * n / d).abs()
    } else {
        (e2 - 1.0 / d).abs()
    };
    CertReport::new("tight-frame", residual, tol, None)
}

/// First index of each cluster of support atoms within [`DISTINCT_DIST`].
pub fn distinct_support(cfg: &WeightedConfig) -> Vec<usize> {
    let mut reps: Vec<usize> = Vec::new();
    for i in cfg.support() {
        let p = cfg.points()[i].coords();
        let dup = reps.iter().any(|&r| {
            let q = cfg.points()[r].coords();
            p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() <= DISTINCT_DIST
        });
        if !dup {
            reps.push(i);
        }
    }
    reps
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PackingMode {
    /// Every distinct triple has product `<= 0`; at most `2d` points.
    Nonpositive,
    /// Every distinct triple has product `< 0`, read numerically as
    /// `<= -eps`; at most `d + 1` points.
    StrictlyNegative { eps: f64 },
    /// Every distinct triple has product `<= -eps`; at most `1 + 1/eps`
    /// points, in any dimension.
    EpsilonMargin { eps: f64 },
}

impl PackingMode {
    fn threshold(&self) -> f64 {
        match *self {
            PackingMode::Nonpositive => 0.0,
            PackingMode::StrictlyNegative { eps } | PackingMode::EpsilonMargin { eps } => -eps,
        }
    }

    /// Largest size a passing configuration in `S^{d-1}` may have.
    pub fn bound(&self, d: usize) -> usize {
        match *self {
            PackingMode::Nonpositive => 2 * d,
            PackingMode::StrictlyNegative { .. } => d + 1,
            PackingMode::EpsilonMargin { eps } => (1.0 + 1.0 / eps + 1e-12).floor() as usize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackingReport {
    pub mode: PackingMode,
    pub n_points: usize,
    /// `(i, j, k)` and the largest distinct-triple product.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_triple: Option<(usize, usize, usize, f64)>,
    pub passed: bool,
    pub bound: usize,
    /// False when fewer than three distinct points make the check vacuous.
    pub bound_checked: bool,
}

impl PackingReport {
    pub fn to_cert(&self, tol: f64) -> CertReport {
        let (residual, witness) = match self.worst_triple {
            Some((i, j, k, p)) => ((p - self.mode.threshold()).max(0.0), Some(Witness::Indices(vec![i, j, k]))),
            None => (0.0, None),
        };
        let mut c = CertReport::new(format!("packing({:?})", self.mode), residual, tol, witness);
        c.passed = self.passed;
        c
    }
}

/// Largest product `<x,y><x,z><y,z>` over distinct triples, compared with
/// the mode's threshold.
///
/// # Panics
///
/// If a configuration passes with more points than the mode's bound
/// allows. That would be a counterexample to the packing theorems and is
/// never silently reported.
pub fn check_packing(cfg: &WeightedConfig, mode: PackingMode, tol: f64) -> Result<PackingReport> {
    if let PackingMode::StrictlyNegative { eps } | PackingMode::EpsilonMargin { eps } = mode {
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter(format!("packing margin must be positive, got {eps}")));
        }
        if !(tol < eps) {
            return Err(Error::InvalidParameter(format!("slack {tol} would swallow the margin {eps}")));
        }
    }
    let idx = distinct_support(cfg);
    let n = idx.len();
    let bound = mode.bound(cfg.dim());
    if n < 3 {
        return Ok(PackingReport { mode, n_points: n, worst_triple: None, passed: true, bound, bound_checked: false });
    }
    let g = cfg.gram();
    let mut worst = (0, 0, 0, f64::NEG_INFINITY);
    for a in 0..n {
        for b in (a + 1)..n {
            for c in (b + 1)..n {
                let (i, j, k) = (idx[a], idx[b], idx[c]);
                let p = g[i][j] * g[i][k] * g[j][k];
                if p > worst.3 {
                    worst = (i, j, k, p);
                }
            }
        }
    }
    let passed = worst.3 <= mode.threshold() + tol;
    assert!(
        !(passed && n > bound),
        "three-point packing bound violated: {n} distinct points pass {mode:?} in dimension {} (bound {bound})",
        cfg.dim()
    );
    Ok(PackingReport { mode, n_points: n, worst_triple: Some(worst), passed, bound, bound_checked: true })
}

/// Every three distinct points include an orthogonal pair.
pub fn check_nearly_orthogonal(cfg: &WeightedConfig, tol: f64) -> CertReport {
    let idx = distinct_support(cfg);
    let g = cfg.gram();
    let n = idx.len();
    let mut worst = (0.0, None);
    for a in 0..n {
        for b in (a + 1)..n {
            for c in (b + 1)..n {
                let (i, j, k) = (idx[a], idx[b], idx[c]);
                let m = g[i][j].abs().min(g[i][k].abs()).min(g[j][k].abs());
                if m > worst.0 {
                    worst = (m, Some(Witness::Indices(vec![i, j, k])));
                }
            }
        }
    }
    CertReport::new("nearly-orthogonal", worst.0, tol, worst.1)
}

/// `<x,y><x,z><y,z> >= 0` for all support triples, repeats allowed.
pub fn check_nonneg_triples(cfg: &WeightedConfig, tol: f64) -> CertReport {
    let idx = cfg.support();
    let g = cfg.gram();
    let n = idx.len();
    let mut worst = (0.0, None);
    for a in 0..n {
        for b in a..n {
            for c in b..n {
                let (i, j, k) = (idx[a], idx[b], idx[c]);
                let r = -(g[i][j] * g[i][k] * g[j][k]);
                if r > worst.0 {
                    worst = (r, Some(Witness::Indices(vec![i, j, k])));
                }
            }
        }
    }
    CertReport::new("nonneg-triples", worst.0, tol, worst.1)
}

/// Each support point has an (approximately) orthogonal partner in the
/// support.
pub fn check_orthogonal_counterpart(cfg: &WeightedConfig, tol: f64) -> CertReport {
    let idx = distinct_support(cfg);
    let g = cfg.gram();
    let mut worst = (f64::NEG_INFINITY, None);
    for &i in &idx {
        let best = idx.iter().filter(|&&j| j != i).map(|&j| g[i][j].abs()).fold(1.0, f64::min);
        if best > worst.0 {
            worst = (best, Some(Witness::Indices(vec![i])));
        }
    }
    CertReport::new("orthogonal-counterpart", worst.0.max(0.0), tol, worst.1)
}

/// Atoms grouped into lines through the origin: `|<x,y>| >= 1 - tol`.
fn lines(cfg: &WeightedConfig, tol: f64) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::new();
    for i in cfg.support() {
        let x = &cfg.points()[i];
        match out.iter_mut().find(|(r, _)| x.dot(&cfg.points()[*r]).abs() >= 1.0 - tol) {
            Some(line) => line.1 += cfg.weights()[i],
            None => out.push((i, cfg.weights()[i])),
        }
    }
    out
}

/// Whether the measure is, up to signs and order, the uniform measure on
/// an orthonormal basis: exactly `d` lines, pairwise orthogonal, each of
/// weight `1/d`.
pub fn classify_orthonormal_basis(cfg: &WeightedConfig, tol: f64) -> CertReport {
    let d = cfg.dim();
    let ls = lines(cfg, tol);
    let mut residual = (ls.len() as f64 - d as f64).abs();
    for (a, &(i, w)) in ls.iter().enumerate() {
        residual = residual.max((w - 1.0 / d as f64).abs());
        for &(j, _) in &ls[a + 1..] {
            residual = residual.max(cfg.points()[i].dot(&cfg.points()[j]).abs());
        }
    }
    let reps = ls.iter().map(|l| l.0).collect();
    CertReport::new("orthonormal-basis", residual, tol, Some(Witness::Indices(reps)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralReport {
    /// Whether the hypotheses hold, so `report` carries the conclusion.
    pub applicable: bool,
    pub report: CertReport,
}

/// Isotropic measures without obtuse angles are uniform orthonormal
/// bases. Applicable when the isotropy residual is within `tol` and all
/// support inner products are `>= -angle_tol`.
pub fn check_non_obtuse(cfg: &WeightedConfig, tol: f64, angle_tol: f64) -> StructuralReport {
    let iso = check_isotropic(cfg, tol);
    let idx = cfg.support();
    let g = cfg.gram();
    let min_ip = idx.iter().flat_map(|&i| idx.iter().map(move |&j| (i, j))).map(|(i, j)| g[i][j]).fold(1.0, f64::min);
    let applicable = iso.passed && min_ip >= -angle_tol;
    let mut report = classify_orthonormal_basis(cfg, 1e-4);
    report.name = "non-obtuse".into();
    if !applicable {
        report.passed = false;
    }
    StructuralReport { applicable, report }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityReport {
    /// Balanced and isotropic within tolerance.
    pub precondition_met: bool,
    /// `sum_{i,j} w_i w_j P(<x_i,x_j>) = 0` with `P(t) = (t-1)(t+1/d)`.
    pub identity: CertReport,
    /// Present when all inner products are `>= -1/d - tol`: the measure is
    /// the uniform regular simplex.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<CertReport>,
}

impl RigidityReport {
    pub fn passed(&self) -> bool {
        self.precondition_met && self.identity.passed && self.structure.as_ref().is_none_or(|s| s.passed)
    }
}

pub fn check_simplex_rigidity(cfg: &WeightedConfig, tol: f64) -> RigidityReport {
    let d = cfg.dim();
    let df = d as f64;
    let precondition_met = check_balanced(cfg, tol).passed && check_isotropic(cfg, tol).passed;
    let g = cfg.gram();
    let w = cfg.weights();
    let n = cfg.len();
    let mut s = CompensatedSum::default();
    for i in 0..n {
        for j in 0..n {
            s.add(w[i] * w[j] * (g[i][j] - 1.0) * (g[i][j] + 1.0 / df));
        }
    }
    let mut identity = CertReport::new("simplex-rigidity:identity", s.value().abs(), tol, None);
    if !precondition_met {
        identity.passed = false;
    }

    let merged = cfg.merge_duplicates(DISTINCT_DIST);
    let mg = merged.gram();
    let m = merged.len();
    let min_ip = (0..m)
        .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| mg[i][j])
        .fold(1.0, f64::min);
    let structure = (precondition_met && min_ip >= -1.0 / df - tol).then(|| {
        let mut r = (m as f64 - (df + 1.0)).abs();
        for i in 0..m {
            r = r.max((merged.weights()[i] - 1.0 / (df + 1.0)).abs());
            for j in 0..i {
                r = r.max((mg[i][j] + 1.0 / df).abs());
            }
        }
        CertReport::new("simplex-rigidity:structure", r, tol, None)
    });
    RigidityReport { precondition_met, identity, structure }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::UnitVector;
    use crate::lift::{gen_crosspolytope, gen_orthonormal_basis, gen_simplex, gen_two_bases};
    use crate::sampling::random_config;

    #[test]
    fn identities_on_samples() {
        for d in 2..=10 {
            assert!(check_identity_rosen(d, 1000, d as u64).unwrap().passed);
            assert!(check_identity_uvt(d, 1000, d as u64).unwrap().passed);
        }
        assert!(check_identity_rosen(1, 10, 0).is_err());
    }

    #[test]
    fn identities_at_special_points() {
        let [(a, b), (c, e)] = rosen_identity_sides(4, GramTriple::new(0.0, 0.0, 0.0)).unwrap();
        assert!(c.abs() < 1e-16 && e == 0.0);
        assert!((a - b).abs() < 1e-15);
        for d in 2..=8 {
            let df = d as f64;
            let [(a, b), (c, e)] = rosen_identity_sides(d, GramTriple::new(1.0, 1.0, 1.0)).unwrap();
            let expected = 6.0 - 12.0 / df + 6.0 / (df * df);
            assert!((a - expected).abs() < 1e-13 && (b - expected).abs() < 1e-13);
            assert!(c.abs() < 1e-15 && e.abs() < 1e-15);
            let (l, r) = uvt_identity_sides(d, GramTriple::new(0.0, 0.0, 0.0)).unwrap();
            assert_eq!(l, 0.0);
            assert!(r.abs() < 1e-15);
            let (l, r) = uvt_identity_sides(d, GramTriple::new(1.0, 1.0, 1.0)).unwrap();
            assert_eq!(l, 1.0);
            assert!((r - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn psd_examples() {
        let cfg = random_config(3, 10, true, 4);
        assert!(psd_check(&cfg, 2, 3).unwrap().passed);
        let onb = gen_orthonormal_basis(3).unwrap();
        let r = psd_check(&onb, 1, 1).unwrap();
        assert!(r.passed);
        assert!(r.max_residual < 1e-15);
        assert!(!psd_check_impl(&cfg, 2, 3, true).unwrap().passed);
    }

    #[test]
    fn isotropy_and_balance() {
        assert!(check_isotropic(&gen_orthonormal_basis(4).unwrap(), ISOTROPY_TOL).passed);
        assert!(check_isotropic(&gen_crosspolytope(4).unwrap(), ISOTROPY_TOL).passed);
        let single = WeightedConfig::uniform(vec![UnitVector::basis(3, 0).unwrap()]).unwrap();
        let r = check_isotropic(&single, ISOTROPY_TOL);
        // diag(2/3, -1/3, -1/3)
        assert!((r.max_residual - (6.0f64 / 9.0).sqrt()).abs() < 1e-15);
        assert!(!r.passed);

        assert!(check_balanced(&gen_crosspolytope(3).unwrap(), 1e-12).passed);
        let r = check_balanced(&gen_orthonormal_basis(4).unwrap(), 1e-12);
        assert!((r.max_residual - 0.5).abs() < 1e-15);
        assert!(check_balanced(&gen_simplex(5).unwrap(), 1e-12).passed);
    }

    #[test]
    fn tight_frames() {
        assert!(check_tight_frame(&gen_crosspolytope(3).unwrap(), 1e-12).passed);
        assert!(check_tight_frame(&gen_orthonormal_basis(5).unwrap(), 1e-12).passed);
        let near = WeightedConfig::uniform(vec![
            UnitVector::new(vec![1.0, 0.0]).unwrap(),
            UnitVector::new(vec![1.0, 0.01]).unwrap(),
        ])
        .unwrap();
        assert!(!check_tight_frame(&near, 1e-8).passed);
        assert!(check_tight_frame(&gen_two_bases(0.4, 0.3).unwrap(), 1e-12).passed);
    }

    #[test]
    fn packing_examples() {
        for d in 2..=6 {
            let r = check_packing(&gen_crosspolytope(d).unwrap(), PackingMode::Nonpositive, 1e-12).unwrap();
            assert!(r.passed && r.n_points == 2 * d && r.bound == 2 * d);
            let eps = 1.0 / (d * d * d) as f64;
            let r = check_packing(&gen_simplex(d).unwrap(), PackingMode::StrictlyNegative { eps }, 1e-12).unwrap();
            assert!(r.passed && r.n_points == d + 1 && r.bound == d + 1);
        }
        let mut pts = gen_crosspolytope(3).unwrap().points().to_vec();
        pts.push(UnitVector::new(vec![0.3, -0.5, 0.8]).unwrap());
        let extra = WeightedConfig::uniform(pts).unwrap();
        assert!(!check_packing(&extra, PackingMode::Nonpositive, 1e-12).unwrap().passed);
    }

    #[test]
    fn packing_vacuous_and_duplicates() {
        let two =
            WeightedConfig::uniform(vec![UnitVector::basis(2, 0).unwrap(), UnitVector::basis(2, 1).unwrap()]).unwrap();
        let r = check_packing(&two, PackingMode::Nonpositive, 0.0).unwrap();
        assert!(r.passed && !r.bound_checked);
        // a doubled crosspolytope is still 2d distinct points
        let mut pts = gen_crosspolytope(2).unwrap().points().to_vec();
        pts.extend(pts.clone());
        let doubled = WeightedConfig::uniform(pts).unwrap();
        let r = check_packing(&doubled, PackingMode::Nonpositive, 1e-12).unwrap();
        assert!(r.passed && r.n_points == 4);
    }

    #[test]
    fn epsilon_margin_bound() {
        let s = gen_simplex(3).unwrap();
        let r = check_packing(&s, PackingMode::EpsilonMargin { eps: 1.0 / 27.0 }, 1e-12).unwrap();
        assert!(r.passed);
        assert_eq!(r.bound, 28);
        assert!(check_packing(&s, PackingMode::EpsilonMargin { eps: 0.0 }, 1e-12).is_err());
        assert!(check_packing(&s, PackingMode::StrictlyNegative { eps: 1e-6 }, 1e-6).is_err());
    }

    #[test]
    fn nearly_orthogonal_examples() {
        assert!(check_nearly_orthogonal(&gen_crosspolytope(4).unwrap(), 1e-12).passed);
        let r = check_nearly_orthogonal(&gen_simplex(3).unwrap(), ORTHO_TOL);
        assert!(!r.passed);
        assert!((r.max_residual - 1.0 / 3.0).abs() < 1e-15);
        let one = WeightedConfig::uniform(vec![UnitVector::basis(2, 0).unwrap()]).unwrap();
        assert!(check_nearly_orthogonal(&one, 0.0).passed);
    }

    #[test]
    fn nonneg_triples_examples() {
        assert!(check_nonneg_triples(&gen_orthonormal_basis(3).unwrap(), 0.0).passed);
        for (theta, lambda) in [(0.2, 0.5), (1.1, 0.25), (0.7, 1.0)] {
            assert!(check_nonneg_triples(&gen_two_bases(theta, lambda).unwrap(), 1e-15).passed);
        }
        let r = check_nonneg_triples(&gen_simplex(3).unwrap(), 1e-12);
        assert!(!r.passed);
        assert!((r.max_residual - 1.0 / 27.0).abs() < 1e-15);
    }

    #[test]
    fn counterpart_examples() {
        assert!(check_orthogonal_counterpart(&gen_crosspolytope(3).unwrap(), 1e-12).passed);
        assert!(check_orthogonal_counterpart(&gen_two_bases(0.6, 0.4).unwrap(), 1e-12).passed);
        let r = check_orthogonal_counterpart(&gen_simplex(4).unwrap(), ORTHO_TOL);
        assert!(!r.passed);
        assert!((r.max_residual - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rigidity_examples() {
        for d in 2..=7 {
            let r = check_simplex_rigidity(&gen_simplex(d).unwrap(), 1e-9);
            assert!(r.precondition_met && r.identity.passed && r.structure.as_ref().unwrap().passed);
            let r = check_simplex_rigidity(&gen_crosspolytope(d).unwrap(), 1e-9);
            assert!(r.identity.passed && r.structure.is_none());
        }
        let s = gen_simplex(3).unwrap();
        let mut w = s.weights().to_vec();
        w[0] += 0.05;
        let total: f64 = w.iter().sum();
        let w: Vec<f64> = w.iter().map(|x| x / total).collect();
        let perturbed = WeightedConfig::new(s.points().to_vec(), w).unwrap();
        let r = check_simplex_rigidity(&perturbed, 1e-9);
        assert!(!r.precondition_met && !r.identity.passed && !r.passed());
    }

    #[test]
    fn orthonormal_classification() {
        let onb = gen_orthonormal_basis(4).unwrap();
        assert!(classify_orthonormal_basis(&onb, 1e-4).passed);
        // sign flips do not matter
        assert!(classify_orthonormal_basis(&onb.with_negated(2), 1e-4).passed);
        assert!(!classify_orthonormal_basis(&gen_simplex(4).unwrap(), 1e-4).passed);
        // a crosspolytope is d lines of weight 1/d
        assert!(classify_orthonormal_basis(&gen_crosspolytope(4).unwrap(), 1e-4).passed);
    }

    #[test]
    fn non_obtuse_only_certifies_the_basis() {
        for d in 2..=6 {
            let r = check_non_obtuse(&gen_orthonormal_basis(d).unwrap(), ISOTROPY_TOL, 1e-9);
            assert!(r.applicable && r.report.passed);
            for other in [gen_crosspolytope(d).unwrap(), gen_simplex(d).unwrap()] {
                assert!(!check_non_obtuse(&other, ISOTROPY_TOL, 1e-9).applicable);
            }
        }
        assert!(!check_non_obtuse(&gen_two_bases(0.5, 0.5).unwrap(), ISOTROPY_TOL, 1e-9).applicable);
    }
}
