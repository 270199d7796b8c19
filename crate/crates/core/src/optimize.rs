//! Riemannian minimization of discrete three-point energies.
//!
//! Each point lives on `S^{d-1}`; the Euclidean gradient is projected onto
//! the tangent space (`g <- g - <g,x> x`) and steps are retracted by
//! renormalization, with Armijo backtracking. Non-smooth `|uvt|^p` is
//! replaced by `((uvt)^2 + eps^2)^{p/2}` and `eps` is annealed through a
//! decreasing schedule, each level warm-started from the previous one.
//! Weights, when optimized, are a softmax of free parameters.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::CertReport;
use crate::energy::three_point_energy;
use crate::error::{Error, Result};
use crate::geometry::{dot, norm, GramTriple, UnitVector, WeightedConfig};
use crate::kernels::{BoundKernel, Kernel, KernelSpec};
use crate::sampling::{random_tangent, random_unit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmijoParams {
    /// Sufficient-decrease constant.
    pub c1: f64,
    pub shrink: f64,
    pub initial_step: f64,
    pub max_step: f64,
    pub min_step: f64,
}

impl Default for ArmijoParams {
    fn default() -> Self {
        Self { c1: 1e-4, shrink: 0.5, initial_step: 0.1, max_step: 1e6, min_step: 1e-20 }
    }
}

/// `1e-1, 1e-2, ..., 1e-8`.
pub fn default_schedule() -> Vec<f64> {
    (1..=8).map(|k| 10f64.powi(-k)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    pub dim: usize,
    pub n_points: usize,
    pub kernel: KernelSpec,
    pub optimize_weights: bool,
    pub restarts: usize,
    /// Iteration cap per smoothing level.
    pub max_iters: usize,
    pub smoothing_schedule: Vec<f64>,
    pub step_rule: ArmijoParams,
    pub seed: u64,
    /// Riemannian gradient norm at which a level counts as converged.
    pub convergence_tol: f64,
}

impl OptimizerSettings {
    pub fn new(dim: usize, n_points: usize, kernel: KernelSpec) -> Self {
        Self {
            dim,
            n_points,
            kernel,
            optimize_weights: false,
            restarts: 20,
            max_iters: 2000,
            smoothing_schedule: default_schedule(),
            step_rule: ArmijoParams::default(),
            seed: 0,
            convergence_tol: 1e-10,
        }
    }

    pub fn validate(&self) -> Result<BoundKernel> {
        if self.n_points == 0 {
            return Err(Error::InvalidParameter("need at least one point".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidParameter("need at least one restart".into()));
        }
        let s = &self.smoothing_schedule;
        if s.is_empty() || s.iter().any(|e| !(*e > 0.0)) || s.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidParameter("smoothing schedule must be positive and strictly decreasing".into()));
        }
        let k = self.kernel.bind(self.dim)?;
        if !k.is_smoothable() {
            return Err(Error::UnsupportedKernel(format!(
                "{} cannot be optimized; use pframe, uvt or poly",
                self.kernel.describe()
            )));
        }
        Ok(k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub restart: usize,
    pub level: usize,
    pub epsilon: f64,
    pub iter: usize,
    /// Smoothed objective after the step.
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub restart: usize,
    pub final_energy: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerResult {
    pub best_config: WeightedConfig,
    /// Unsmoothed energy of `best_config`.
    pub best_energy: f64,
    pub best_restart: usize,
    /// Accepted steps of the best restart.
    pub energy_trace: Vec<TraceEntry>,
    pub restarts_summary: Vec<RestartSummary>,
    pub converged: bool,
}

/// Point positions (row-major `n x d`) and softmax parameters.
#[derive(Debug, Clone)]
struct State {
    d: usize,
    x: Vec<f64>,
    theta: Vec<f64>,
}

impl State {
    fn n(&self) -> usize {
        self.theta.len()
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    fn weights(&self) -> Vec<f64> {
        let m = self.theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = self.theta.iter().map(|t| (t - m).exp()).collect();
        let s: f64 = e.iter().sum();
        e.into_iter().map(|x| x / s).collect()
    }

    fn gram(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        let mut g = vec![vec![1.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let c = dot(self.point(i), self.point(j));
                g[i][j] = c;
                g[j][i] = c;
            }
        }
        g
    }

    /// `x_i <- normalize(x_i - step * dx_i)`, `theta <- theta - step * dtheta`.
    fn retract(&self, step: f64, dx: &[f64], dtheta: &[f64]) -> State {
        let mut x: Vec<f64> = self.x.iter().zip(dx).map(|(a, b)| a - step * b).collect();
        for p in x.chunks_mut(self.d) {
            let n = norm(p);
            p.iter_mut().for_each(|c| *c /= n);
        }
        let theta = self.theta.iter().zip(dtheta).map(|(a, b)| a - step * b).collect();
        State { d: self.d, x, theta }
    }

    fn to_config(&self) -> WeightedConfig {
        let pts = (0..self.n()).map(|i| UnitVector::from_normalized(self.point(i).to_vec())).collect();
        WeightedConfig::from_parts_unchecked(self.d, pts, self.weights())
    }

    fn from_config(cfg: &WeightedConfig) -> State {
        State {
            d: cfg.dim(),
            x: cfg.points().iter().flat_map(|p| p.coords().iter().copied()).collect(),
            theta: cfg.weights().iter().map(|w| w.max(1e-300).ln()).collect(),
        }
    }
}

/// Something with a value and Riemannian gradient in point positions
/// (and weight parameters).
trait Objective {
    fn value(&self, s: &State) -> f64;
    /// Value, tangent gradient in `x`, gradient in `theta`.
    fn value_grad(&self, s: &State) -> (f64, Vec<f64>, Vec<f64>);
}

fn project_tangent(s: &State, gx: &mut [f64]) {
    for i in 0..s.n() {
        let p = s.point(i);
        let g = &mut gx[i * s.d..(i + 1) * s.d];
        let c = dot(g, p);
        g.iter_mut().zip(p).for_each(|(gi, pi)| *gi -= c * pi);
    }
}

/// Chain rule from `dF/dG_ab` (off-diagonal, ordered) to tangent gradients.
fn gram_to_point_grad(s: &State, dg: &[Vec<f64>]) -> Vec<f64> {
    let (n, d) = (s.n(), s.d);
    let mut gx = vec![0.0; n * d];
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let c = dg[a][b] + dg[b][a];
            if c != 0.0 {
                let xb = s.point(b);
                for k in 0..d {
                    gx[a * d + k] += c * xb[k];
                }
            }
        }
    }
    project_tangent(s, &mut gx);
    gx
}

fn softmax_pullback(w: &[f64], gw: &[f64]) -> Vec<f64> {
    let mean: f64 = w.iter().zip(gw).map(|(a, b)| a * b).sum();
    w.iter().zip(gw).map(|(wi, gi)| wi * (gi - mean)).collect()
}

struct SmoothedEnergy<'a> {
    kernel: &'a BoundKernel,
    eps: f64,
    with_weights: bool,
}

impl Objective for SmoothedEnergy<'_> {
    fn value(&self, s: &State) -> f64 {
        let n = s.n();
        let g = s.gram();
        let w = s.weights();
        let mut f = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    f +=
                        w[i] * w[j] * w[k] * self.kernel.smoothed(GramTriple::new(g[j][k], g[i][k], g[i][j]), self.eps);
                }
            }
        }
        f
    }

    fn value_grad(&self, s: &State) -> (f64, Vec<f64>, Vec<f64>) {
        let n = s.n();
        let g = s.gram();
        let w = s.weights();
        let mut f = 0.0;
        let mut dg = vec![vec![0.0; n]; n];
        let mut gw = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let (val, du, dv, dt) =
                        self.kernel.smoothed_with_grad(GramTriple::new(g[j][k], g[i][k], g[i][j]), self.eps);
                    let ww = w[i] * w[j] * w[k];
                    f += ww * val;
                    dg[j][k] += ww * du;
                    dg[i][k] += ww * dv;
                    dg[i][j] += ww * dt;
                    if self.with_weights {
                        gw[i] += w[j] * w[k] * val;
                        gw[j] += w[i] * w[k] * val;
                        gw[k] += w[i] * w[j] * val;
                    }
                }
            }
        }
        let gx = gram_to_point_grad(s, &dg);
        let gt = if self.with_weights { softmax_pullback(&w, &gw) } else { vec![0.0; n] };
        (f, gx, gt)
    }
}

/// Log-sum-exp of the products over distinct triples `i < j < k`.
struct SoftMaxProduct {
    tau: f64,
}

impl SoftMaxProduct {
    fn products(g: &[Vec<f64>]) -> Vec<(usize, usize, usize, f64)> {
        let n = g.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    out.push((i, j, k, g[i][j] * g[i][k] * g[j][k]));
                }
            }
        }
        out
    }

    fn lse(&self, prods: &[(usize, usize, usize, f64)]) -> (f64, Vec<f64>) {
        let m = prods.iter().map(|p| p.3).fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = prods.iter().map(|p| ((p.3 - m) / self.tau).exp()).collect();
        let s: f64 = e.iter().sum();
        (m + self.tau * s.ln(), e.into_iter().map(|x| x / s).collect())
    }
}

impl Objective for SoftMaxProduct {
    fn value(&self, s: &State) -> f64 {
        self.lse(&Self::products(&s.gram())).0
    }

    fn value_grad(&self, s: &State) -> (f64, Vec<f64>, Vec<f64>) {
        let g = s.gram();
        let prods = Self::products(&g);
        let (f, pi) = self.lse(&prods);
        let n = s.n();
        let mut dg = vec![vec![0.0; n]; n];
        for (&(i, j, k, _), p) in prods.iter().zip(&pi) {
            dg[i][j] += p * g[i][k] * g[j][k];
            dg[i][k] += p * g[i][j] * g[j][k];
            dg[j][k] += p * g[i][j] * g[i][k];
        }
        (f, gram_to_point_grad(s, &dg), vec![0.0; n])
    }
}

struct LevelOutcome {
    state: State,
    iterations: usize,
    converged: bool,
}

fn descend<O: Objective>(
    obj: &O,
    start: State,
    rule: &ArmijoParams,
    max_iters: usize,
    tol: f64,
    mut on_step: impl FnMut(usize, f64),
) -> LevelOutcome {
    let mut s = start;
    let mut step = rule.initial_step;
    for iter in 0..max_iters {
        let (f, gx, gt) = obj.value_grad(&s);
        let gnorm2: f64 = gx.iter().chain(&gt).map(|x| x * x).sum();
        if gnorm2.sqrt() <= tol {
            return LevelOutcome { state: s, iterations: iter, converged: true };
        }
        step = (step * 2.0).min(rule.max_step);
        let accepted = loop {
            let cand = s.retract(step, &gx, &gt);
            let fc = obj.value(&cand);
            if fc <= f - rule.c1 * step * gnorm2 {
                break Some((cand, fc));
            }
            step *= rule.shrink;
            if step < rule.min_step {
                break None;
            }
        };
        match accepted {
            Some((cand, fc)) => {
                on_step(iter, fc);
                s = cand;
                if f - fc <= 1e-16 * f.abs().max(1e-300) {
                    return LevelOutcome { state: s, iterations: iter + 1, converged: false };
                }
            }
            None => return LevelOutcome { state: s, iterations: iter, converged: false },
        }
    }
    LevelOutcome { state: s, iterations: max_iters, converged: false }
}

fn random_state(d: usize, n: usize, rng: &mut ChaCha8Rng) -> State {
    State { d, x: (0..n).flat_map(|_| random_unit(d, rng).coords().to_vec()).collect(), theta: vec![0.0; n] }
}

fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

struct RunOutcome {
    config: WeightedConfig,
    energy: f64,
    trace: Vec<TraceEntry>,
    summary: RestartSummary,
}

fn run_restart(settings: &OptimizerSettings, kernel: &BoundKernel, restart: usize) -> Result<RunOutcome> {
    let mut rng = restart_rng(settings.seed, restart);
    let mut state = random_state(settings.dim, settings.n_points, &mut rng);
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    for (level, &eps) in settings.smoothing_schedule.iter().enumerate() {
        let obj = SmoothedEnergy { kernel, eps, with_weights: settings.optimize_weights };
        let out = descend(&obj, state, &settings.step_rule, settings.max_iters, settings.convergence_tol, |iter, e| {
            trace.push(TraceEntry { restart, level, epsilon: eps, iter, energy: e })
        });
        state = out.state;
        iterations += out.iterations;
        converged = out.converged;
    }
    let config = state.to_config();
    let energy = three_point_energy(&config, &settings.kernel)?.value;
    Ok(RunOutcome {
        config,
        energy,
        trace,
        summary: RestartSummary { restart, final_energy: energy, iterations, converged },
    })
}

/// Panics if an optimizer output undercuts a proven lower bound.
fn guard_lower_bound(kernel: &KernelSpec, d: usize, energy: f64) {
    let bound = 1.0 / (d * d) as f64;
    let bounded = match kernel.kernel {
        Kernel::PFrame { p } => p <= 1.0,
        Kernel::TripleProduct => true,
        _ => false,
    };
    assert!(
        !(bounded && energy < bound - 1e-9),
        "optimizer reported {} energy {energy} below the lower bound 1/d^2 = {bound}",
        kernel.describe()
    );
}

/// Minimizes the energy from `restarts` random starts and returns the best
/// run, scored by its unsmoothed energy.
pub fn minimize_energy(settings: &OptimizerSettings) -> Result<OptimizerResult> {
    let kernel = settings.validate()?;
    let runs: Vec<RunOutcome> =
        (0..settings.restarts).into_par_iter().map(|r| run_restart(settings, &kernel, r)).collect::<Result<_>>()?;
    for r in &runs {
        guard_lower_bound(&settings.kernel, settings.dim, r.energy);
    }
    // lowest energy, ties to the lower restart index
    let best = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.energy.total_cmp(&b.1.energy).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .expect("at least one restart");
    let restarts_summary = runs.iter().map(|r| r.summary).collect();
    let run = runs.into_iter().nth(best).expect("index in range");
    Ok(OptimizerResult {
        best_config: run.config,
        best_energy: run.energy,
        best_restart: best,
        converged: run.summary.converged,
        energy_trace: run.trace,
        restarts_summary,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PackingSearchResult {
    pub config: WeightedConfig,
    /// Exact largest distinct-triple product of `config`.
    pub minimax_value: f64,
    pub best_restart: usize,
    /// Minimax value reached by every restart.
    pub per_restart: Vec<f64>,
}

/// Temperatures for the soft maximum, `1e-1` down to `1e-9`.
pub fn packing_schedule() -> Vec<f64> {
    (1..=9).map(|k| 10f64.powi(-k)).collect()
}

/// Searches for `n` points on `S^{d-1}` minimizing the largest product
/// `<x,y><x,z><y,z>` over distinct triples, by descending a log-sum-exp
/// soft maximum with decreasing temperature.
pub fn search_packing(d: usize, n: usize, restarts: usize, seed: u64) -> Result<PackingSearchResult> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    if n < 3 {
        return Err(Error::InvalidParameter(format!("packing search needs N >= 3, got {n}")));
    }
    if restarts == 0 {
        return Err(Error::InvalidParameter("need at least one restart".into()));
    }
    let rule = ArmijoParams::default();
    let runs: Vec<(WeightedConfig, f64)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = restart_rng(seed, r);
            let mut state = random_state(d, n, &mut rng);
            for tau in packing_schedule() {
                state = descend(&SoftMaxProduct { tau }, state, &rule, 2000, 1e-12, |_, _| {}).state;
            }
            let cfg = state.to_config();
            let max = SoftMaxProduct::products(&cfg.gram()).iter().map(|p| p.3).fold(f64::NEG_INFINITY, f64::max);
            (cfg, max)
        })
        .collect();
    let best = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .expect("at least one restart");
    let per_restart = runs.iter().map(|r| r.1).collect();
    let (config, minimax_value) = runs.into_iter().nth(best).expect("index in range");
    Ok(PackingSearchResult { config, minimax_value, best_restart: best, per_restart })
}

/// Compares the analytic Riemannian gradient of the smoothed energy with
/// central finite differences along `n_dirs` random tangent directions.
/// The residual is the largest relative error, scaled by
/// `max(|analytic|, |numeric|, |grad| |dir|)`.
pub fn gradient_check(
    kernel: &KernelSpec,
    cfg: &WeightedConfig,
    smoothing: f64,
    fd_step: f64,
    n_dirs: usize,
    seed: u64,
    tol: f64,
) -> Result<CertReport> {
    let k = kernel.bind(cfg.dim())?;
    if !k.is_smoothable() {
        return Err(Error::UnsupportedKernel(kernel.describe()));
    }
    let obj = SmoothedEnergy { kernel: &k, eps: smoothing, with_weights: false };
    let s = State::from_config(cfg);
    let (_, gx, _) = obj.value_grad(&s);
    let gnorm = norm(&gx);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let zero = vec![0.0; s.n()];
    for _ in 0..n_dirs {
        let dir: Vec<f64> = cfg.points().iter().flat_map(|p| random_tangent(p, &mut rng)).collect();
        let analytic = dot(&gx, &dir);
        let plus = obj.value(&s.retract(-fd_step, &dir, &zero));
        let minus = obj.value(&s.retract(fd_step, &dir, &zero));
        let numeric = (plus - minus) / (2.0 * fd_step);
        // directions along a symmetry have zero derivative; measure those
        // against the gradient's own size rather than against zero
        let scale = analytic.abs().max(numeric.abs()).max(gnorm * norm(&dir));
        let rel = if scale == 0.0 { 0.0 } else { (analytic - numeric).abs() / scale };
        worst = worst.max(rel);
    }
    Ok(CertReport::new(format!("gradient-check({})", kernel.describe()), worst, tol, None))
}

/// The analytic tangent gradient of the smoothed energy, one row per point.
pub fn smoothed_gradient(kernel: &KernelSpec, cfg: &WeightedConfig, smoothing: f64) -> Result<Vec<Vec<f64>>> {
    let k = kernel.bind(cfg.dim())?;
    if !k.is_smoothable() {
        return Err(Error::UnsupportedKernel(kernel.describe()));
    }
    let s = State::from_config(cfg);
    let (_, gx, _) = SmoothedEnergy { kernel: &k, eps: smoothing, with_weights: false }.value_grad(&s);
    Ok(gx.chunks(cfg.dim()).map(|c| c.to_vec()).collect())
}
