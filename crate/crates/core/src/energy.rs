//! Discrete three-point energies
//! `E_K(mu) = sum_{i,j,k} w_i w_j w_k K(x_i, x_j, x_k)` and the two-point
//! and moment quantities that bound them.
//!
//! All triple sums parallelize over the outer index and combine the
//! per-index partial sums in index order with compensated summation, so a
//! result never depends on the thread count.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gegenbauer;
use crate::geometry::{clamp_cos, outer_sum, GramTriple, WeightedConfig};
use crate::kernels::{self, KernelSpec};

/// Name and version of the Monte-Carlo generator. Changing the stream
/// changes every seeded estimate.
pub const MC_GENERATOR: &str = "ChaCha8Rng/rand_chacha-0.9, StandardNormal via rand_distr-0.5, v1";

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Energy contributions split by which indices of `(i, j, k)` coincide.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub all_equal: f64,
    pub two_equal: f64,
    pub all_distinct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub value: f64,
    pub kernel: String,
    pub n_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breakdown: Option<Breakdown>,
}

fn check_dims(cfg: &WeightedConfig, kernel: &KernelSpec) -> Result<kernels::BoundKernel> {
    kernel.bind(cfg.dim())
}

/// `sum_{i,j,k} w_i w_j w_k K(x_i, x_j, x_k)`.
///
/// ```
/// use threepoint::{energy::three_point_energy, kernels::KernelSpec, lift::gen_orthonormal_basis};
/// let onb = gen_orthonormal_basis(4).unwrap();
/// let e = three_point_energy(&onb, &KernelSpec::pframe(0.5)).unwrap();
/// assert!((e.value - 1.0 / 16.0).abs() < 1e-15);
/// ```
pub fn three_point_energy(cfg: &WeightedConfig, kernel: &KernelSpec) -> Result<EnergyReport> {
    three_point_energy_with(cfg, kernel, false)
}

/// As [`three_point_energy`], optionally with the index-coincidence
/// breakdown.
pub fn three_point_energy_with(cfg: &WeightedConfig, kernel: &KernelSpec, breakdown: bool) -> Result<EnergyReport> {
    let k = check_dims(cfg, kernel)?;
    let n = cfg.len();
    let g = cfg.gram();
    let w = cfg.weights();
    // per outer index: [total, all_equal, two_equal, all_distinct]
    let partials: Vec<[f64; 4]> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = [CompensatedSum::default(); 4];
            for j in 0..n {
                let wij = w[i] * w[j];
                for l in 0..n {
                    let val = wij * w[l] * k.eval(GramTriple::new(g[j][l], g[i][l], g[i][j]));
                    acc[0].add(val);
                    if breakdown {
                        let class = match (i == j, i == l, j == l) {
                            (true, true, _) => 1,
                            (false, false, false) => 3,
                            _ => 2,
                        };
                        acc[class].add(val);
                    }
                }
            }
            acc.map(|a| a.value())
        })
        .collect();
    let column = |c: usize| partials.iter().map(|p| p[c]).collect::<CompensatedSum>().value();
    Ok(EnergyReport {
        value: column(0),
        kernel: kernel.describe(),
        n_points: n,
        breakdown: breakdown.then(|| Breakdown { all_equal: column(1), two_equal: column(2), all_distinct: column(3) }),
    })
}

/// Atoms sorted lexicographically by coordinates, then weight. Energies of
/// a configuration and of any permutation of it agree bit-for-bit after
/// canonicalization.
pub fn canonical_order(cfg: &WeightedConfig) -> WeightedConfig {
    let mut perm: Vec<usize> = (0..cfg.len()).collect();
    perm.sort_by(|&a, &b| {
        let pa = cfg.points()[a].coords();
        let pb = cfg.points()[b].coords();
        pa.iter()
            .zip(pb)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(cfg.weights()[a].total_cmp(&cfg.weights()[b]))
    });
    cfg.permuted(&perm)
}

/// `sum_{i,j} w_i w_j |<x_i, x_j>|^p`.
pub fn two_point_frame_energy(cfg: &WeightedConfig, p: f64) -> Result<f64> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("frame exponent must be positive, got {p}")));
    }
    let pts = cfg.points();
    let w = cfg.weights();
    let n = cfg.len();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    let c = clamp_cos(pts[i].dot(&pts[j])).abs();
                    let f = if p == 2.0 { c * c } else { c.powf(p) };
                    w[i] * w[j] * f
                })
                .collect::<CompensatedSum>()
                .value()
        })
        .collect();
    Ok(rows.into_iter().collect::<CompensatedSum>().value())
}

/// Second-moment matrix `A = sum_i w_i x_i x_i^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentMatrix {
    dim: usize,
    entries: DMatrix<f64>,
}

impl MomentMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    /// `||A - I/d||_F`.
    pub fn isotropy_residual(&self) -> f64 {
        let d = self.dim;
        (&self.entries - DMatrix::identity(d, d) / d as f64).norm()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.entries.clone().symmetric_eigenvalues().iter().copied().collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.entries.row(i).iter().copied().collect()).collect()
    }
}

pub fn moment_matrix(cfg: &WeightedConfig) -> MomentMatrix {
    MomentMatrix { dim: cfg.dim(), entries: outer_sum(cfg) }
}

/// `Tr(A^3)`, which equals the `uvt` energy of the measure.
pub fn trace_cubed(a: &MomentMatrix) -> f64 {
    let m = &a.entries;
    let sq = m * m;
    let d = a.dim;
    let mut s = CompensatedSum::default();
    for k in 0..d {
        for l in 0..d {
            s.add(sq[(k, l)] * m[(l, k)]);
        }
    }
    s.value()
}

/// The `size x size` leading block of `S_m^d(mu)`, entry `(i, j)` being
/// `sum_{a,b,c} w_a w_b w_c S_{m,i,j}^d(x_a, x_b, x_c)`.
pub fn s_moment_matrix(cfg: &WeightedConfig, m: usize, size: usize) -> Result<Vec<Vec<f64>>> {
    if size == 0 || size > 6 {
        return Err(Error::InvalidParameter(format!("S-moment block size must be in 1..=6, got {size}")));
    }
    let d = cfg.dim();
    kernels::q_kernel(m, d, GramTriple::new(0.0, 0.0, 0.0))?;
    let n = cfg.len();
    let g = cfg.gram();
    let w = cfg.weights();
    let h = d + 2 * m;
    let partials: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|a| {
            let mut acc = vec![CompensatedSum::default(); size * size];
            let mut tmp = vec![0.0; size * size];
            for b in 0..n {
                for c in 0..n {
                    let weight = w[a] * w[b] * w[c];
                    if weight == 0.0 {
                        continue;
                    }
                    tmp.iter_mut().for_each(|x| *x = 0.0);
                    for p in GramTriple::new(g[b][c], g[a][c], g[a][b]).permutations() {
                        let pu = gegenbauer::all_unchecked(size - 1, h, p.u);
                        let pv = gegenbauer::all_unchecked(size - 1, h, p.v);
                        let q = kernels::q_unchecked(m, d, p);
                        for i in 0..size {
                            for j in 0..size {
                                tmp[i * size + j] += pu[i] * pv[j] * q;
                            }
                        }
                    }
                    for (s, x) in acc.iter_mut().zip(&tmp) {
                        s.add(weight * x / 6.0);
                    }
                }
            }
            acc.iter().map(|s| s.value()).collect()
        })
        .collect();
    let mut out = vec![vec![0.0; size]; size];
    for i in 0..size {
        for j in 0..size {
            out[i][j] = partials.iter().map(|p| p[i * size + j]).collect::<CompensatedSum>().value();
        }
    }
    // S_{m,i,j} and S_{m,j,i} agree; average away rounding asymmetry.
    for i in 0..size {
        for j in 0..i {
            let s = 0.5 * (out[i][j] + out[j][i]);
            out[i][j] = s;
            out[j][i] = s;
        }
    }
    Ok(out)
}

/// Monte-Carlo estimate of the energy of the uniform measure on `S^{d-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

use crate::sampling::random_unit;

/// Estimates `I_K(sigma)` from `n` independent uniform triples.
pub fn mc_energy(d: usize, kernel: &KernelSpec, n: usize, seed: u64) -> Result<McEstimate> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one Monte-Carlo sample".into()));
    }
    let k = kernel.bind(d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Welford
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for s in 0..n {
        let x = random_unit(d, &mut rng);
        let y = random_unit(d, &mut rng);
        let z = random_unit(d, &mut rng);
        let val = k.eval_points(&x, &y, &z)?;
        let delta = val - mean;
        mean += delta / (s + 1) as f64;
        m2 += delta * (val - mean);
    }
    let var = if n > 1 { m2 / (n - 1) as f64 } else { 0.0 };
    Ok(McEstimate { mean, std_error: (var / n as f64).sqrt(), n_samples: n, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::UnitVector;
    use crate::kernels::{Monomial, PsdBlock};
    use crate::lift::{gen_crosspolytope, gen_orthonormal_basis, gen_simplex, gen_two_bases};
    use crate::sampling::random_config;
    use proptest::prelude::*;

    #[test]
    fn onb_pframe_energy() {
        for d in 2..=6 {
            let cfg = gen_orthonormal_basis(d).unwrap();
            for p in [0.25, 0.5, 1.0] {
                let e = three_point_energy(&cfg, &KernelSpec::pframe(p)).unwrap();
                assert!((e.value - 1.0 / (d * d) as f64).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn single_point_uvt() {
        let cfg = WeightedConfig::uniform(vec![UnitVector::new(vec![0.3, 0.4, 0.5]).unwrap()]).unwrap();
        let e = three_point_energy(&cfg, &KernelSpec::triple_product()).unwrap();
        assert!((e.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_bases_pframe_one() {
        for (theta, lambda) in [(0.0, 0.5), (0.3, 0.1), (1.2, 0.9), (std::f64::consts::FRAC_PI_2, 0.0)] {
            let cfg = gen_two_bases(theta, lambda).unwrap();
            let e = three_point_energy(&cfg, &KernelSpec::pframe(1.0)).unwrap();
            assert!((e.value - 0.25).abs() < 1e-14, "theta={theta} lambda={lambda}: {}", e.value);
        }
    }

    #[test]
    fn breakdown_sums_to_value() {
        let cfg = random_config(3, 7, true, 11);
        let e = three_point_energy_with(&cfg, &KernelSpec::pframe(0.7), true).unwrap();
        let b = e.breakdown.unwrap();
        assert!((b.all_equal + b.two_equal + b.all_distinct - e.value).abs() < 1e-12);
        let w3: f64 = cfg.weights().iter().map(|w| w * w * w).sum();
        assert!((b.all_equal - w3).abs() < 1e-15);
    }

    #[test]
    fn frame_energy_examples() {
        for d in 2..6 {
            let df = d as f64;
            let onb = gen_orthonormal_basis(d).unwrap();
            assert!((two_point_frame_energy(&onb, 2.0).unwrap() - 1.0 / df).abs() < 1e-15);
            let cross = gen_crosspolytope(d).unwrap();
            assert!((two_point_frame_energy(&cross, 2.0).unwrap() - 1.0 / df).abs() < 1e-15);
        }
        let single = WeightedConfig::uniform(vec![UnitVector::new(vec![0.0, 1.0]).unwrap()]).unwrap();
        assert_eq!(two_point_frame_energy(&single, 3.7).unwrap(), 1.0);
        assert!(two_point_frame_energy(&single, 0.0).is_err());
    }

    #[test]
    fn moment_matrix_examples() {
        let onb = gen_orthonormal_basis(4).unwrap();
        assert!(moment_matrix(&onb).isotropy_residual() < 1e-16);
        let e1 = WeightedConfig::uniform(vec![UnitVector::basis(3, 0).unwrap()]).unwrap();
        let a = moment_matrix(&e1);
        assert_eq!(a.entries()[(0, 0)], 1.0);
        assert_eq!(a.entries().iter().filter(|x| **x != 0.0).count(), 1);
        let simplex = gen_simplex(2).unwrap();
        let a = moment_matrix(&simplex);
        assert!((a.entries() - DMatrix::identity(2, 2) * 0.5).norm() < 1e-15);
    }

    #[test]
    fn trace_cubed_examples() {
        let iso = MomentMatrix { dim: 3, entries: DMatrix::identity(3, 3) / 3.0 };
        assert!((trace_cubed(&iso) - 1.0 / 9.0).abs() < 1e-16);
        let e1 =
            MomentMatrix { dim: 3, entries: DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 0.0, 0.0])) };
        assert_eq!(trace_cubed(&e1), 1.0);
        let m =
            MomentMatrix { dim: 2, entries: DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.75, 0.25])) };
        assert!((trace_cubed(&m) - 7.0 / 16.0).abs() < 1e-16);
    }

    #[test]
    fn s_moment_examples() {
        let onb = gen_orthonormal_basis(3).unwrap();
        // only the triples (a, a, b) contribute: Q_1 = 1 for one third of
        // their permutations
        let s = s_moment_matrix(&onb, 1, 1).unwrap();
        assert!((s[0][0] - 2.0 / 9.0).abs() < 1e-16);
        let cfg = random_config(4, 9, true, 5);
        let s = s_moment_matrix(&cfg, 0, 1).unwrap();
        assert!((s[0][0] - 1.0).abs() < 1e-14);
        for m in 0..=2 {
            let s = s_moment_matrix(&cfg, m, 3).unwrap();
            assert!(kernels::min_eigenvalue(&s) >= -1e-8);
        }
        assert!(s_moment_matrix(&cfg, 0, 7).is_err());
        assert!(s_moment_matrix(&gen_orthonormal_basis(2).unwrap(), 2, 1).is_err());
    }

    #[test]
    fn s_moment_matches_kernel_energy() {
        let cfg = random_config(3, 6, true, 9);
        let s = s_moment_matrix(&cfg, 2, 2).unwrap();
        let e = three_point_energy(&cfg, &KernelSpec::s_entry(2, 1, 0)).unwrap();
        assert!((s[1][0] - e.value).abs() < 1e-14);
    }

    #[test]
    fn mc_constant_kernel() {
        let k = KernelSpec::poly(vec![Monomial { a: 0, b: 0, c: 0, coef: 1.0 }]);
        let est = mc_energy(3, &k, 1000, 1).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.std_error, 0.0);
        assert!(mc_energy(3, &k, 0, 1).is_err());
    }

    #[test]
    fn mc_is_deterministic() {
        let k = KernelSpec::pframe(1.0);
        assert_eq!(mc_energy(3, &k, 500, 42).unwrap(), mc_energy(3, &k, 500, 42).unwrap());
        assert_ne!(mc_energy(3, &k, 500, 42).unwrap().mean, mc_energy(3, &k, 500, 43).unwrap().mean);
    }

    /// `E[(uvt)^2]` for uniform `x, y, z` on `S^2` by product quadrature:
    /// fix `x` at the pole, integrate `y` over its polar cosine `t`, and `z`
    /// over its full sphere in spherical coordinates.
    fn quadrature_pframe2_s2() -> f64 {
        let nt = 64;
        let (nth, nph) = (96, 96);
        // Gauss-Legendre nodes via Newton on the Legendre recurrence.
        let gl = |n: usize| -> Vec<(f64, f64)> {
            (0..n)
                .map(|i| {
                    let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
                    let mut dp = 0.0;
                    for _ in 0..100 {
                        let (mut p0, mut p1) = (1.0, x);
                        for k in 1..n {
                            let kf = k as f64;
                            let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
                            p0 = p1;
                            p1 = p2;
                        }
                        dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                        let dx = p1 / dp;
                        x -= dx;
                        if dx.abs() < 1e-16 {
                            break;
                        }
                    }
                    (x, 2.0 / ((1.0 - x * x) * dp * dp))
                })
                .collect()
        };
        let tnodes = gl(nt);
        let cnodes = gl(nth);
        let mut total = 0.0;
        for &(t, wt) in &tnodes {
            // x = e3, y = (sqrt(1-t^2), 0, t)
            let y = [(1.0 - t * t).sqrt(), 0.0, t];
            let mut inner = 0.0;
            for &(c, wc) in &cnodes {
                let s = (1.0 - c * c).sqrt();
                for k in 0..nph {
                    let phi = 2.0 * std::f64::consts::PI * k as f64 / nph as f64;
                    let z = [s * phi.cos(), s * phi.sin(), c];
                    let v = z[2];
                    let u = y[0] * z[0] + y[2] * z[2];
                    inner += wc * (u * v * t).powi(2) * (2.0 * std::f64::consts::PI / nph as f64);
                }
            }
            total += wt * 0.5 * inner / (4.0 * std::f64::consts::PI);
        }
        total
    }

    #[test]
    fn mc_pframe2_matches_quadrature() {
        let oracle = quadrature_pframe2_s2();
        // closed form from Gaussian moment identities: 11/225
        assert!((oracle - 11.0 / 225.0).abs() < 1e-12);
        let est = mc_energy(3, &KernelSpec::pframe(2.0), 200_000, 7).unwrap();
        assert!((est.mean - oracle).abs() <= 4.0 * est.std_error, "{est:?} vs {oracle}");
    }

    #[test]
    fn uniform_measure_beats_discrete_for_even_p() {
        // comparative only: no closed-form optimum is claimed for even p
        let est = mc_energy(3, &KernelSpec::pframe(2.0), 200_000, 11).unwrap();
        let margin = 4.0 * est.std_error;
        for cfg in [gen_orthonormal_basis(3).unwrap(), crate::lift::gen_simplex(3).unwrap()] {
            assert!(est.mean <= three_point_energy(&cfg, &KernelSpec::pframe(2.0)).unwrap().value + margin);
        }
        for seed in 0..20 {
            let cfg = random_config(3, 12, seed % 2 == 0, seed);
            assert!(est.mean <= three_point_energy(&cfg, &KernelSpec::pframe(2.0)).unwrap().value + margin);
        }
    }

    #[test]
    fn mc_cone_kernel_is_centered() {
        let blocks = vec![
            PsdBlock::new(0, vec![vec![0.0, 0.0], vec![0.0, 1.0]]).unwrap(),
            PsdBlock::new(1, vec![vec![2.0, 1.0], vec![1.0, 1.0]]).unwrap(),
        ];
        let est = mc_energy(4, &KernelSpec::cone(blocks), 100_000, 3).unwrap();
        assert!(est.mean.abs() <= 4.0 * est.std_error, "{est:?}");
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let cfg = gen_orthonormal_basis(3).unwrap();
        assert!(three_point_energy(&cfg, &KernelSpec::pframe(1.0).with_dim(4)).is_err());
    }

    #[test]
    fn permutation_invariance() {
        let cfg = random_config(3, 8, true, 21);
        let perm = [3, 7, 0, 5, 1, 6, 2, 4];
        let k = KernelSpec::pframe(0.6);
        let a = three_point_energy(&cfg, &k).unwrap().value;
        let b = three_point_energy(&cfg.permuted(&perm), &k).unwrap().value;
        assert!((a - b).abs() <= 1e-13);
        let ca = three_point_energy(&canonical_order(&cfg), &k).unwrap().value;
        let cb = three_point_energy(&canonical_order(&cfg.permuted(&perm)), &k).unwrap().value;
        assert_eq!(ca.to_bits(), cb.to_bits());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn uvt_energy_is_trace_cubed(d in 2usize..=6, n in 1usize..=12, seed in any::<u64>()) {
            let cfg = random_config(d, n, true, seed);
            let e = three_point_energy(&cfg, &KernelSpec::triple_product()).unwrap().value;
            prop_assert!((e - trace_cubed(&moment_matrix(&cfg))).abs() <= 1e-12);
        }

        #[test]
        fn lower_bounds(d in 2usize..=5, n in 1usize..=10, seed in any::<u64>()) {
            let cfg = random_config(d, n, true, seed);
            let df = d as f64;
            prop_assert!(two_point_frame_energy(&cfg, 2.0).unwrap() >= 1.0 / df - 1e-12);
            let e1 = three_point_energy(&cfg, &KernelSpec::pframe(1.0)).unwrap().value;
            prop_assert!(e1 >= 1.0 / (df * df) - 1e-12);
            let ehalf = three_point_energy(&cfg, &KernelSpec::pframe(0.5)).unwrap().value;
            prop_assert!(ehalf >= e1 - 1e-14);
            prop_assert!((moment_matrix(&cfg).trace() - 1.0).abs() <= 1e-12);
        }
    }
}
