//! The `threepoint` command-line tool.
//!
//! Exit codes: 0 on success or when every requested check passes, 1 when a
//! check fails, 2 on usage or validation errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::certify::{self, CertReport, PackingMode};
use crate::energy::{mc_energy, three_point_energy_with};
use crate::error::{Error, Result};
use crate::geometry::{UnitVector, WeightedConfig};
use crate::io::{export_json, export_trace_csv, read_config, read_kernel_arg, write_config, RunManifest};
use crate::lift::{gen_crosspolytope, gen_orthonormal_basis, gen_simplex, gen_two_bases, lift, LiftSpec};
use crate::optimize::{minimize_energy, search_packing, OptimizerSettings};

/// Environment variable holding the default worker thread count.
pub const THREADS_ENV: &str = "THREEPOINT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "threepoint", version, about = "Three-point energies on the unit sphere")]
struct Cli {
    /// Worker threads (overrides THREEPOINT_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a canonical configuration.
    Gen(GenArgs),
    /// Lift a configuration on S^{d-1} to S^d.
    Lift(LiftArgs),
    /// Evaluate a three-point energy.
    Energy(EnergyArgs),
    /// Run certificate checks on a configuration.
    Certify(CertifyArgs),
    /// Minimize a three-point energy.
    Optimize(OptimizeArgs),
    /// Search for configurations minimizing the largest triple product.
    PackSearch(PackSearchArgs),
    /// Monte-Carlo energy of the uniform measure.
    Mc(McArgs),
    /// Check positive semidefiniteness of S-moment matrices.
    PsdCheck(PsdArgs),
    /// Check the polynomial certificate identities on random samples.
    IdentityCheck(IdentityArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Shape {
    Onb,
    Cross,
    Simplex,
    TwoBases,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    shape: Shape,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct LiftArgs {
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated pole coordinates in R^{d+1}.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pole: Option<Vec<f64>>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EnergyArgs {
    #[arg(long)]
    config: PathBuf,
    /// Kernel JSON, inline or a file path.
    #[arg(long)]
    kernel: String,
    #[arg(long)]
    breakdown: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CertifyArgs {
    #[arg(long)]
    config: PathBuf,
    /// Comma list of checks, or `all`.
    #[arg(long, default_value = "all", value_delimiter = ',')]
    checks: Vec<String>,
    /// Overrides each check's default tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    n_points: usize,
    #[arg(long, default_value = r#"{"kind":"pframe","p":1}"#)]
    kernel: String,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long, default_value_t = 2000)]
    max_iters: usize,
    /// Optimize weights as well as positions.
    #[arg(long)]
    weights: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV export of the best restart's energy trace.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PackSearchArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    n_points: usize,
    #[arg(long, default_value_t = 50)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct McArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    kernel: String,
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PsdArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 2)]
    m_max: usize,
    #[arg(long, default_value_t = 4)]
    size: usize,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct IdentityArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    json: Option<PathBuf>,
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    configure_threads(cli.threads);
    let line = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match run(cli.command, RunManifest::start(line)) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn configure_threads(flag: Option<usize>) {
    let n = flag.or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok()));
    if let Some(n) = n {
        // a pool built earlier in the same process keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn print_cert(r: &CertReport) {
    let status = if r.passed { "PASS" } else { "FAIL" };
    println!("{status} {} residual={:e} tol={:e}", r.name, r.max_residual, r.tolerance);
}

fn finish(manifest: RunManifest, out: &Path) -> Result<()> {
    let path = manifest.finish(out)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn run(cmd: Command, mut m: RunManifest) -> Result<bool> {
    match cmd {
        Command::Gen(a) => {
            let need_dim = || a.dim.ok_or_else(|| Error::InvalidParameter("--dim is required".into()));
            let cfg = match a.shape {
                Shape::Onb => gen_orthonormal_basis(need_dim()?)?,
                Shape::Cross => gen_crosspolytope(need_dim()?)?,
                Shape::Simplex => gen_simplex(need_dim()?)?,
                Shape::TwoBases => {
                    if a.dim.is_some_and(|d| d != 2) {
                        return Err(Error::InvalidParameter("two-bases lives in dimension 2".into()));
                    }
                    gen_two_bases(a.theta.unwrap_or(std::f64::consts::FRAC_PI_4), a.lambda.unwrap_or(0.5))?
                }
            };
            write_config(&a.out, &cfg)?;
            m.add_output(&a.out);
            finish(m, &a.out)?;
            Ok(true)
        }
        Command::Lift(a) => {
            let src = read_config(&a.config)?;
            m.add_input(&a.config)?;
            let spec = match a.pole {
                Some(p) => LiftSpec::with_pole(src, UnitVector::new(p)?),
                None => LiftSpec::new(src),
            };
            write_config(&a.out, &lift(&spec)?)?;
            m.add_output(&a.out);
            finish(m, &a.out)?;
            Ok(true)
        }
        Command::Energy(a) => {
            let cfg = read_config(&a.config)?;
            m.add_input(&a.config)?;
            let (kernel, kpath) = read_kernel_arg(&a.kernel)?;
            if let Some(p) = kpath {
                m.add_input(&p)?;
            }
            let r = three_point_energy_with(&cfg, &kernel, a.breakdown)?;
            println!("{}", r.value);
            if let Some(b) = &r.breakdown {
                println!("all_equal {}\ntwo_equal {}\nall_distinct {}", b.all_equal, b.two_equal, b.all_distinct);
            }
            if let Some(out) = &a.out {
                export_json(&r, out)?;
                m.add_output(out);
                finish(m, out)?;
            }
            Ok(true)
        }
        Command::Certify(a) => {
            let cfg = read_config(&a.config)?;
            m.add_input(&a.config)?;
            let reports = run_checks(&cfg, &a.checks, a.tol)?;
            reports.iter().for_each(print_cert);
            if let Some(out) = &a.json {
                export_json(&reports, out)?;
                m.add_output(out);
                finish(m, out)?;
            }
            Ok(reports.iter().all(|r| r.passed))
        }
        Command::Optimize(a) => {
            let (kernel, kpath) = read_kernel_arg(&a.kernel)?;
            if let Some(p) = kpath {
                m.add_input(&p)?;
            }
            let mut s = OptimizerSettings::new(a.dim, a.n_points, kernel);
            s.restarts = a.restarts;
            s.max_iters = a.max_iters;
            s.optimize_weights = a.weights;
            s.seed = a.seed;
            m.seeds.push(a.seed);
            let r = minimize_energy(&s)?;
            println!("{}", r.best_energy);
            println!("best_restart {} converged {}", r.best_restart, r.converged);
            if let Some(t) = &a.trace {
                export_trace_csv(&r.energy_trace, t)?;
                m.add_output(t);
            }
            if let Some(out) = &a.out {
                write_config(out, &r.best_config)?;
                m.add_output(out);
                finish(m, out)?;
            } else if let Some(t) = &a.trace {
                finish(m, t)?;
            }
            Ok(true)
        }
        Command::PackSearch(a) => {
            m.seeds.push(a.seed);
            let r = search_packing(a.dim, a.n_points, a.restarts, a.seed)?;
            println!("{}", r.minimax_value);
            println!("best_restart {}", r.best_restart);
            if let Some(out) = &a.out {
                write_config(out, &r.config)?;
                m.add_output(out);
                finish(m, out)?;
            }
            Ok(true)
        }
        Command::Mc(a) => {
            let (kernel, kpath) = read_kernel_arg(&a.kernel)?;
            if let Some(p) = kpath {
                m.add_input(&p)?;
            }
            m.seeds.push(a.seed);
            let est = mc_energy(a.dim, &kernel, a.samples, a.seed)?;
            println!("{} +- {}", est.mean, est.std_error);
            if let Some(out) = &a.out {
                export_json(&est, out)?;
                m.add_output(out);
                finish(m, out)?;
            }
            Ok(true)
        }
        Command::PsdCheck(a) => {
            let cfg = read_config(&a.config)?;
            m.add_input(&a.config)?;
            let r = certify::psd_check(&cfg, a.m_max, a.size)?;
            print_cert(&r);
            if let Some(out) = &a.json {
                export_json(&r, out)?;
                m.add_output(out);
                finish(m, out)?;
            }
            Ok(r.passed)
        }
        Command::IdentityCheck(a) => {
            m.seeds.push(a.seed);
            let reports = vec![
                certify::check_identity_rosen(a.dim, a.samples, a.seed)?,
                certify::check_identity_uvt(a.dim, a.samples, a.seed)?,
            ];
            reports.iter().for_each(print_cert);
            if let Some(out) = &a.json {
                export_json(&reports, out)?;
                m.add_output(out);
                finish(m, out)?;
            }
            Ok(reports.iter().all(|r| r.passed))
        }
    }
}

/// Names accepted by `certify --checks`.
pub const CHECK_NAMES: &[&str] = &[
    "isotropic",
    "balanced",
    "tight-frame",
    "packing",
    "strict-packing",
    "nearly-orthogonal",
    "nonneg-triples",
    "orthogonal-counterpart",
    "onb",
    "non-obtuse",
    "simplex-rigidity",
    "psd",
];

fn run_checks(cfg: &WeightedConfig, names: &[String], tol: Option<f64>) -> Result<Vec<CertReport>> {
    let names: Vec<&str> =
        if names.iter().any(|n| n == "all") { CHECK_NAMES.to_vec() } else { names.iter().map(|s| s.trim()).collect() };
    let mut out = Vec::with_capacity(names.len());
    for name in names {
        let r = match name {
            "isotropic" => certify::check_isotropic(cfg, tol.unwrap_or(certify::ISOTROPY_TOL)),
            "balanced" => certify::check_balanced(cfg, tol.unwrap_or(certify::ISOTROPY_TOL)),
            "tight-frame" => certify::check_tight_frame(cfg, tol.unwrap_or(certify::ISOTROPY_TOL)),
            "packing" => {
                let t = tol.unwrap_or(certify::ORTHO_TOL);
                certify::check_packing(cfg, PackingMode::Nonpositive, t)?.to_cert(t)
            }
            "strict-packing" => {
                let eps = tol.unwrap_or(certify::ORTHO_TOL);
                certify::check_packing(cfg, PackingMode::StrictlyNegative { eps }, 0.0)?.to_cert(0.0)
            }
            "nearly-orthogonal" => certify::check_nearly_orthogonal(cfg, tol.unwrap_or(certify::ORTHO_TOL)),
            "nonneg-triples" => certify::check_nonneg_triples(cfg, tol.unwrap_or(certify::ORTHO_TOL)),
            "orthogonal-counterpart" => certify::check_orthogonal_counterpart(cfg, tol.unwrap_or(certify::ORTHO_TOL)),
            "onb" => certify::classify_orthonormal_basis(cfg, tol.unwrap_or(1e-4)),
            "non-obtuse" => certify::check_non_obtuse(cfg, tol.unwrap_or(certify::ISOTROPY_TOL), 1e-9).report,
            "simplex-rigidity" => {
                let r = certify::check_simplex_rigidity(cfg, tol.unwrap_or(certify::ISOTROPY_TOL));
                let mut c = r.identity.clone();
                c.name = "simplex-rigidity".into();
                c.passed = r.passed();
                c
            }
            "psd" => certify::psd_check(cfg, psd_levels(cfg.dim()), 4)?,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown check {other:?}; expected one of {} or all",
                    CHECK_NAMES.join(", ")
                )))
            }
        };
        out.push(r);
    }
    Ok(out)
}

/// Levels `m >= 2` need `d >= 3`.
fn psd_levels(d: usize) -> usize {
    if d >= 3 {
        2
    } else {
        1
    }
}
