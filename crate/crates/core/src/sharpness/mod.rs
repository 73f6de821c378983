//! Sharpness experiments for the fractional square function
//! `Af = (Σ_k (|I_k|^{-α} ∫_{I_k} f)² 1_{I_k})^{1/2}` on the origin chain.
//!
//! Each ε of a sweep yields a characteristic and a norm ratio in closed form;
//! the growth exponent of the operator norm in the characteristic is the
//! least-squares slope of `ln(ratio)` against `ln(char)` over the smallest ε.

mod closed_form;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use closed_form::{
    dual_characteristic_closed_form, dual_coefficient, dual_coefficient_error, dual_quantities,
    ln_dual_coefficient, primal_characteristic_closed_form, primal_quantities, truncation_depth,
    DualQuantities, PrimalQuantities, DEPTH_FACTOR, DUAL_EPS_CAP, MIN_DEPTH_FACTOR,
};

use crate::error::{Error, Result};
use crate::weights::{conjugate, SOBOLEV_TOL};

/// Which extremizer a sweep evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Primal,
    Dual,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Primal => "primal",
            Variant::Dual => "dual",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "primal" => Ok(Variant::Primal),
            "dual" => Ok(Variant::Dual),
            other => Err(Error::param(format!(
                "unknown variant '{other}' (expected primal or dual)"
            ))),
        }
    }
}

/// Exponents on the Sobolev line `α = 1/q + 1/p'` with `1 < p ≤ q`,
/// `0 < α < 1`, and a strictly decreasing ε grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessConfig {
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub variant: Variant,
    pub eps: Vec<f64>,
}

/// Default grid exponents: ε = 2^-4, …, 2^-12.
pub const DEFAULT_EPS_EXPONENTS: (i32, i32) = (4, 12);
/// Number of smallest-ε rows entering the slope fit by default.
pub const DEFAULT_FIT_WINDOW: usize = 4;

impl SharpnessConfig {
    pub fn new(p: f64, q: f64, alpha: f64, variant: Variant, eps: Vec<f64>) -> Result<Self> {
        if !(p > 1.0 && p <= q && q.is_finite()) {
            return Err(Error::param(format!(
                "need 1 < p <= q < inf, got p={p}, q={q}"
            )));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::param(format!("alpha {alpha} must lie in (0, 1)")));
        }
        let line = 1.0 / q + 1.0 / conjugate(p);
        if (alpha - line).abs() > SOBOLEV_TOL {
            return Err(Error::param(format!(
                "alpha {alpha} is off the Sobolev line 1/q + 1/p' = {line}"
            )));
        }
        if eps.is_empty() {
            return Err(Error::param("epsilon grid is empty"));
        }
        if eps.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return Err(Error::param("epsilon values must lie in (0, 1)"));
        }
        if eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::param("epsilon grid must be strictly decreasing"));
        }
        Ok(SharpnessConfig {
            p,
            q,
            alpha,
            variant,
            eps,
        })
    }

    /// Grid `ε = 2^-min_exp, …, 2^-max_exp`.
    pub fn with_exponents(
        p: f64,
        q: f64,
        alpha: f64,
        variant: Variant,
        min_exp: i32,
        max_exp: i32,
    ) -> Result<Self> {
        if min_exp > max_exp || min_exp < 1 {
            return Err(Error::param(format!(
                "need 1 <= eps-min-exp <= eps-max-exp, got {min_exp} and {max_exp}"
            )));
        }
        let eps = (min_exp..=max_exp).map(|k| 2f64.powi(-k)).collect();
        Self::new(p, q, alpha, variant, eps)
    }

    pub fn standard(p: f64, q: f64, alpha: f64, variant: Variant) -> Result<Self> {
        let (lo, hi) = DEFAULT_EPS_EXPONENTS;
        Self::with_exponents(p, q, alpha, variant, lo, hi)
    }
}

/// One ε of a sweep. `numerator / denominator = ratio`: for the primal
/// experiment these are `‖Af‖` (single-term lower bound) and `‖ω f‖_p`; for the
/// dual experiment the left and right square-function norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub k: usize,
    pub characteristic: f64,
    pub ratio: f64,
    pub numerator: f64,
    pub denominator: f64,
    /// Primal only: `‖Af‖` with the full square sum on every shell.
    pub exact_numerator: Option<f64>,
    pub tail_bound: f64,
}

fn row_at(cfg: &SharpnessConfig, eps: f64, k: usize) -> Result<SweepRow> {
    let (p, q, alpha) = (cfg.p, cfg.q, cfg.alpha);
    Ok(match cfg.variant {
        Variant::Primal => {
            let pq = primal_quantities(eps, p, q, alpha, k)?;
            SweepRow {
                eps,
                k,
                characteristic: pq.characteristic,
                ratio: pq.af_lower / pq.fnorm,
                numerator: pq.af_lower,
                denominator: pq.fnorm,
                exact_numerator: Some(pq.af_exact),
                tail_bound: pq.tail_bound,
            }
        }
        Variant::Dual => {
            let dq = dual_quantities(eps, p, q, alpha, k)?;
            SweepRow {
                eps,
                k,
                characteristic: dq.characteristic,
                ratio: dq.lhs_norm / dq.rhs_norm,
                numerator: dq.lhs_norm,
                denominator: dq.rhs_norm,
                exact_numerator: None,
                tail_bound: dq.tail_bound,
            }
        }
    })
}

/// Evaluates every ε of the grid at depth `K(ε)`, in grid order.
pub fn sweep(cfg: &SharpnessConfig) -> Result<Vec<SweepRow>> {
    sweep_with_depth(cfg, truncation_depth)
}

/// As [`sweep`] with a custom truncation rule, which must still satisfy
/// `K ≥ 20/ε`.
pub fn sweep_with_depth(
    cfg: &SharpnessConfig,
    depth: impl Fn(f64) -> usize + Sync,
) -> Result<Vec<SweepRow>> {
    cfg.eps
        .par_iter()
        .map(|&eps| row_at(cfg, eps, depth(eps)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute residual of `ln(ratio)` about the fitted line.
    pub max_residual: f64,
    /// Smallest and largest ε in the window.
    pub eps_window: (f64, f64),
    pub points: usize,
}

/// Least-squares fit of `ln(ratio)` against `ln(char)` over the `window`
/// rows with the smallest ε.
pub fn fit_slope(rows: &[SweepRow], window: usize) -> Result<SlopeFit> {
    if window < 3 || rows.len() < window {
        return Err(Error::degenerate(format!(
            "slope fit needs a window of at least 3 rows, got {window} of {}",
            rows.len()
        )));
    }
    let mut chosen: Vec<&SweepRow> = rows.iter().collect();
    chosen.sort_by(|a, b| a.eps.total_cmp(&b.eps));
    chosen.truncate(window);
    let xs: Vec<f64> = chosen.iter().map(|r| r.characteristic.ln()).collect();
    let ys: Vec<f64> = chosen.iter().map(|r| r.ratio.ln()).collect();
    if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
        return Err(Error::degenerate(
            "non-positive characteristic or ratio in fit window",
        ));
    }
    let n = window as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= f64::EPSILON * mx.abs().max(1.0) {
        return Err(Error::degenerate(
            "characteristic is constant across the fit window",
        ));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).abs())
        .fold(0.0, f64::max);
    Ok(SlopeFit {
        slope,
        intercept,
        max_residual,
        eps_window: (chosen[0].eps, chosen[window - 1].eps),
        points: window,
    })
}

/// Growth exponent predicted for each experiment: `p'α/q` (primal),
/// `α - 1/2` (dual); the sharp exponent is their maximum.
pub fn expected_slope(p: f64, q: f64, alpha: f64, variant: Option<Variant>) -> f64 {
    let primal = conjugate(p) * alpha / q;
    let dual = alpha - 0.5;
    match variant {
        Some(Variant::Primal) => primal,
        Some(Variant::Dual) => dual,
        None => primal.max(dual),
    }
}
