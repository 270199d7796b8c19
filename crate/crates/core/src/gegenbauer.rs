//! Normalized Gegenbauer polynomials `P_m^h`, scaled so that `P_m^h(1) = 1`.
//!
//! `P_m^h` is the degree-`m` zonal polynomial of `S^{h-1}`, i.e. the
//! Gegenbauer polynomial with `lambda = (h - 2) / 2` divided by its value
//! at one. Dividing the classical recurrence through by `C_m(1)` gives
//!
//! ```text
//! P_0 = 1,  P_1 = x,
//! (k + h - 2) P_{k+1} = (2k + h - 2) x P_k - k P_{k-1},   k >= 1
//! ```
//!
//! which for `h = 2` is the Chebyshev recurrence `T_{k+1} = 2x T_k - T_{k-1}`
//! and for `h = 3` is Legendre's. The denominator is never zero for `h >= 2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DOMAIN_SLACK: f64 = 1e-12;

/// Degree and sphere parameter of a normalized Gegenbauer polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GegenbauerParams {
    pub degree: usize,
    /// The polynomial lives on `S^{h-1}`.
    pub sphere_param: usize,
}

impl GegenbauerParams {
    pub fn new(degree: usize, sphere_param: usize) -> Result<Self> {
        if sphere_param < 2 {
            return Err(Error::InvalidParameter(format!("Gegenbauer sphere parameter h = {sphere_param} < 2")));
        }
        Ok(Self { degree, sphere_param })
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        gegenbauer_eval(self.degree, self.sphere_param, x)
    }
}

fn check(h: usize, x: f64) -> Result<()> {
    if h < 2 {
        return Err(Error::InvalidParameter(format!("Gegenbauer sphere parameter h = {h} < 2")));
    }
    if !(x.abs() <= 1.0 + DOMAIN_SLACK) {
        return Err(Error::OutOfDomain { value: x });
    }
    Ok(())
}

/// Recurrence step: `P_{k+1}` from `P_k`, `P_{k-1}` for `k >= 1`.
#[inline]
pub(crate) fn step(k: usize, h: usize, x: f64, pk: f64, pkm1: f64) -> f64 {
    let kf = k as f64;
    let hf = h as f64;
    ((2.0 * kf + hf - 2.0) * x * pk - kf * pkm1) / (kf + hf - 2.0)
}

/// Evaluates without domain checks. `h >= 2` is still required.
#[inline]
pub(crate) fn eval_unchecked(m: usize, h: usize, x: f64) -> f64 {
    match m {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut prev, mut cur) = (1.0, x);
            for k in 1..m {
                let next = step(k, h, x, cur, prev);
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// `P_m^h(x)` for `x` in `[-1, 1]`.
///
/// ```
/// use threepoint::gegenbauer::gegenbauer_eval;
/// // On S^2 (h = 3) this is the Legendre polynomial (3x^2 - 1)/2.
/// assert!((gegenbauer_eval(2, 3, 0.5).unwrap() - (-0.125)).abs() < 1e-15);
/// ```
pub fn gegenbauer_eval(m: usize, h: usize, x: f64) -> Result<f64> {
    check(h, x)?;
    Ok(eval_unchecked(m, h, x))
}

/// `[P_0^h(x), ..., P_mmax^h(x)]` from one recurrence pass.
pub fn gegenbauer_all(mmax: usize, h: usize, x: f64) -> Result<Vec<f64>> {
    check(h, x)?;
    Ok(all_unchecked(mmax, h, x))
}

pub(crate) fn all_unchecked(mmax: usize, h: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(mmax + 1);
    out.push(1.0);
    if mmax >= 1 {
        out.push(x);
    }
    for k in 1..mmax {
        let next = step(k, h, x, out[k], out[k - 1]);
        out.push(next);
    }
    out
}
