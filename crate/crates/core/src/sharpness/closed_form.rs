//! Closed-form evaluation of both extremizers on the chain `I_k = [0, 2^-k)`.
//!
//! Every norm is a sum over the shells `(2^{-(l+1)}, 2^{-l}]`, `l ≤ K`, of a
//! per-shell power integral. Terms grow like `2^{cK}` with `K ≈ 24/ε`, so
//! all sums are accumulated in log space.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::dyadic::{DyadicInterval, MAX_LEVEL};
use crate::error::{Error, Result};
use crate::weights::{conjugate, one_weight_apq, TestSet, Weight};

/// `ln(e^x - 1)` for `x > 0`.
fn ln_expm1(x: f64) -> f64 {
    if x > 30.0 {
        x + (-(-x).exp()).ln_1p()
    } else {
        x.exp_m1().ln()
    }
}

/// `ln Σ_{k=0}^{l} 2^{2kδ}` for `δ > 0`.
fn ln_geometric(l: usize, delta: f64) -> f64 {
    ln_expm1(2.0 * (l as f64 + 1.0) * delta * LN_2) - ln_expm1(2.0 * delta * LN_2)
}

/// `ln ∫_{shell l} x^γ dx` for `γ > -1`.
fn ln_shell_integral(l: usize, gamma: f64) -> f64 {
    let e = gamma + 1.0;
    -(l as f64) * e * LN_2 + (-(-e * LN_2).exp_m1()).ln() - e.ln()
}

/// Sum of `exp(t)` over the terms, in log space.
fn log_sum_exp(terms: impl Iterator<Item = f64> + Clone) -> f64 {
    let top = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    top + terms.map(|t| (t - top).exp()).sum::<f64>().ln()
}

/// `Σ_{l>K} C·ρ^l / Σ_{l≤K} (terms)` when every term with `l > K` is bounded
/// by `exp(ln_c) ρ^l`.
fn relative_tail(ln_c: f64, rho: f64, k: usize, ln_total: f64) -> f64 {
    (ln_c + (k as f64 + 1.0) * rho.ln() - (-rho).ln_1p() - ln_total).exp()
}

/// Relative bound on a norm `S^{1/e}` when its truncated `e`-th power `S`
/// misses at most a relative `tail`.
fn norm_tail(tail: f64, e: f64) -> f64 {
    ((tail.ln_1p()) / e).exp_m1()
}

/// Smallest admissible `K·ε`.
pub const MIN_DEPTH_FACTOR: f64 = 20.0;
/// `K·ε` used by default. At `K = ⌈20/ε⌉` the slowest tail (dual right-hand
/// norm, decay `2^{-lε}`) still moves the norm by ≈ 1.1e-6 for `q = 8`.
pub const DEPTH_FACTOR: f64 = 24.0;

/// `K(ε) = ⌈24/ε⌉`.
pub fn truncation_depth(eps: f64) -> usize {
    (DEPTH_FACTOR / eps).ceil() as usize
}

fn check_eps(eps: f64, k: usize, upper: f64) -> Result<()> {
    if !(eps > 0.0 && eps < upper) {
        return Err(Error::precondition(format!(
            "epsilon {eps} must lie in (0, {upper})"
        )));
    }
    if (k as f64) < MIN_DEPTH_FACTOR / eps {
        return Err(Error::precondition(format!(
            "truncation depth {k} is below 20/epsilon = {}",
            MIN_DEPTH_FACTOR / eps
        )));
    }
    Ok(())
}

/// Primal extremizer `ω_ε = x^{(1-ε)/p'}`, `f = x^{ε-1}` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrimalQuantities {
    /// `[ω_ε]_{A_pq}` over origin-anchored intervals.
    pub characteristic: f64,
    /// `‖ω_ε f‖_{L^p}`, integrated through the weight machinery.
    pub fnorm: f64,
    /// `‖Af‖_{L^q_{ω^q}}` with `Af` replaced on each shell by its largest
    /// term `ε^{-1} 2^{l(α-ε)}`.
    pub af_lower: f64,
    /// `‖Af‖_{L^q_{ω^q}}` with the full square sum on each shell.
    pub af_exact: f64,
    /// Relative bound on the change of either norm from the shells `l > K`.
    pub tail_bound: f64,
}

/// `ε^{-q/p'} / (q(1-ε)/p' + 1)`.
pub fn primal_characteristic_closed_form(eps: f64, p: f64, q: f64) -> f64 {
    let pc = conjugate(p);
    eps.powf(-q / pc) / (q * (1.0 - eps) / pc + 1.0)
}

/// `ε^{-1} / ((1-ε)p'/q + 1)^{q/p'}`.
pub fn dual_characteristic_closed_form(eps: f64, p: f64, q: f64) -> f64 {
    let pc = conjugate(p);
    1.0 / (eps * ((1.0 - eps) * pc / q + 1.0).powf(q / pc))
}

/// Origin-anchored intervals used for the one-weight characteristic.
const ANCHOR_DEPTH: u32 = 8;

pub fn primal_quantities(
    eps: f64,
    p: f64,
    q: f64,
    alpha: f64,
    k: usize,
) -> Result<PrimalQuantities> {
    check_eps(eps, k, alpha.min(1.0))?;
    let pc = conjugate(p);
    let omega = Weight::power((1.0 - eps) / pc)?;
    let characteristic = one_weight_apq(
        &omega,
        p,
        q,
        &TestSet::OriginAnchored {
            depth: ANCHOR_DEPTH,
        },
    )?
    .value;
    // ∫ (ω_ε f)^p = ∫ x^{p(1-ε)/p'} x^{p(ε-1)}
    let fnorm = Weight::power(p * (1.0 - eps) / pc)?
        .power_moment(p * (eps - 1.0), &DyadicInterval::UNIT)
        .powf(1.0 / p);

    let gamma = q * (1.0 - eps) / pc;
    let delta = alpha - eps;
    let ln_eps_q = -q * eps.ln();
    let lower_terms =
        (0..=k).map(|l| ln_eps_q + q * l as f64 * delta * LN_2 + ln_shell_integral(l, gamma));
    let exact_terms =
        (0..=k).map(|l| ln_eps_q + 0.5 * q * ln_geometric(l, delta) + ln_shell_integral(l, gamma));
    let ln_lower = log_sum_exp(lower_terms);
    let ln_exact = log_sum_exp(exact_terms);

    // both term sequences are bounded by C·ρ^l with ρ = 2^{-qε/p}
    let rho = (-q * eps / p * LN_2).exp();
    let ln_shell_c = (-(-(gamma + 1.0) * LN_2).exp_m1()).ln() - (gamma + 1.0).ln();
    let ln_geo_c = -(-(-2.0 * delta * LN_2).exp_m1()).ln();
    let tail_lower = relative_tail(ln_eps_q + ln_shell_c, rho, k, ln_lower);
    let tail_exact = relative_tail(ln_eps_q + 0.5 * q * ln_geo_c + ln_shell_c, rho, k, ln_exact);

    Ok(PrimalQuantities {
        characteristic,
        fnorm,
        af_lower: (ln_lower / q).exp(),
        af_exact: (ln_exact / q).exp(),
        tail_bound: norm_tail(tail_lower.max(tail_exact), q),
    })
}

/// Dual extremizer `ω_ε = x^{(ε-1)/q}`,
/// `a_k = ε^{1/2} |I_k|^{-ε} x^ε 1_{I_k}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualQuantities {
    pub characteristic: f64,
    /// `‖(Σ_k a_k²)^{1/2}‖_{L^{q'}_{ω^q}}`.
    pub rhs_norm: f64,
    /// `‖(Σ_k (|I_k|^{-α} ∫_{I_k} a_k ω^q)² 1_{I_k})^{1/2}‖_{L^{p'}_{ω^{-p'}}}`.
    pub lhs_norm: f64,
    pub tail_bound: f64,
    /// `max_l sup_{x ∈ shell l} Σ_k a_k(x)²`.
    pub square_sum_sup: f64,
}

/// `½ ε^{-1/2} 2^{k(α-ε)}`; overflows for `k(α-ε) > 1023`, where
/// [`ln_dual_coefficient`] still applies.
pub fn dual_coefficient(eps: f64, alpha: f64, k: usize) -> f64 {
    ln_dual_coefficient(eps, alpha, k).exp()
}

pub fn ln_dual_coefficient(eps: f64, alpha: f64, k: usize) -> f64 {
    -LN_2 - 0.5 * eps.ln() + k as f64 * (alpha - eps) * LN_2
}

/// Largest relative deviation of `|I_k|^{-α} ∫_{I_k} a_k ω^q`, integrated
/// through the weight machinery, from [`dual_coefficient`], over the levels
/// `k ≤ min(K, MAX_LEVEL)` that dyadic intervals can represent.
pub fn dual_coefficient_error(eps: f64, alpha: f64, k_max: usize) -> Result<f64> {
    let omega_q = Weight::power(eps - 1.0)?;
    let mut worst: f64 = 0.0;
    for k in 0..=k_max.min(MAX_LEVEL as usize) {
        let ik = DyadicInterval::origin(k as u32)?;
        let h = ik.length();
        let integral = eps.sqrt() * h.powf(-eps) * omega_q.power_moment(eps, &ik);
        let value = h.powf(-alpha) * integral;
        let expected = dual_coefficient(eps, alpha, k);
        worst = worst.max((value / expected - 1.0).abs());
    }
    Ok(worst)
}

/// `ε ∈ (0, α/2]` is required; the closed forms only need `ε < α`, the cap keeps the shell sums away from that end.
pub const DUAL_EPS_CAP: f64 = 0.5;

pub fn dual_quantities(eps: f64, p: f64, q: f64, alpha: f64, k: usize) -> Result<DualQuantities> {
    check_eps(eps, k, DUAL_EPS_CAP * alpha + f64::EPSILON)?;
    let pc = conjugate(p);
    let qc = conjugate(q);
    let omega = Weight::power((eps - 1.0) / q)?;
    let characteristic = one_weight_apq(
        &omega,
        p,
        q,
        &TestSet::OriginAnchored {
            depth: ANCHOR_DEPTH,
        },
    )?
    .value;

    // rhs: shell l carries ε G_l x^{2ε} with G_l = Σ_{k≤l} 2^{2kε}, weight x^{ε-1}
    let gamma_r = eps * qc + eps - 1.0;
    let rhs_terms = (0..=k)
        .map(|l| 0.5 * qc * (eps.ln() + ln_geometric(l, eps)) + ln_shell_integral(l, gamma_r));
    let ln_rhs = log_sum_exp(rhs_terms);
    // lhs: shell l carries ¼ ε^{-1} H_l with H_l = Σ_{k≤l} 2^{2k(α-ε)}, weight x^{(1-ε)p'/q}
    let delta = alpha - eps;
    let gamma_l = (1.0 - eps) * pc / q;
    let ln_quarter = (0.25 / eps).ln();
    let lhs_terms = (0..=k)
        .map(|l| 0.5 * pc * (ln_quarter + ln_geometric(l, delta)) + ln_shell_integral(l, gamma_l));
    let ln_lhs = log_sum_exp(lhs_terms);

    // rhs terms ≤ C 2^{-lε}; lhs terms ≤ C 2^{-lεp'/q'}
    let shell_c = |g: f64| (-(-(g + 1.0) * LN_2).exp_m1()).ln() - (g + 1.0).ln();
    let rhs_c =
        0.5 * qc * (eps.ln() + 2.0 * eps * LN_2 - ln_expm1(2.0 * eps * LN_2)) + shell_c(gamma_r);
    let lhs_c = 0.5 * pc * (ln_quarter - (-(-2.0 * delta * LN_2).exp_m1()).ln()) + shell_c(gamma_l);
    let tail_rhs = relative_tail(rhs_c, (-eps * LN_2).exp(), k, ln_rhs);
    let tail_lhs = relative_tail(lhs_c, (-eps * pc / qc * LN_2).exp(), k, ln_lhs);

    // Σ_k a_k² peaks at the right end x = 2^{-l} of each shell
    let square_sum_sup = (0..=k)
        .map(|l| (eps.ln() - 2.0 * eps * l as f64 * LN_2 + ln_geometric(l, eps)).exp())
        .fold(0.0, f64::max);

    Ok(DualQuantities {
        characteristic,
        rhs_norm: (ln_rhs / qc).exp(),
        lhs_norm: (ln_lhs / pc).exp(),
        tail_bound: norm_tail(tail_rhs, qc).max(norm_tail(tail_lhs, pc)),
        square_sum_sup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct shell-by-shell summation in plain floating point, feasible for
    /// moderate `ε` and `K`.
    fn primal_direct(eps: f64, p: f64, q: f64, alpha: f64, k: usize) -> (f64, f64) {
        let pc = conjugate(p);
        let gamma = q * (1.0 - eps) / pc;
        let (mut lower, mut exact) = (0.0, 0.0);
        let mut g = 0.0;
        for l in 0..=k {
            let (a, b) = (0.5f64.powi(l as i32 + 1), 0.5f64.powi(l as i32));
            let shell = (b.powf(gamma + 1.0) - a.powf(gamma + 1.0)) / (gamma + 1.0);
            let coeff = |j: usize| {
                let h = 0.5f64.powi(j as i32);
                h.powf(-alpha) * h.powf(eps) / eps
            };
            g += coeff(l).powi(2);
            lower += coeff(l).powf(q) * shell;
            exact += g.powf(q / 2.0) * shell;
        }
        (lower.powf(1.0 / q), exact.powf(1.0 / q))
    }

    #[test]
    fn primal_matches_direct_summation() {
        let (eps, p, q, alpha) = (0.25, 2.0, 4.0, 0.75);
        let k = truncation_depth(eps);
        let pq = primal_quantities(eps, p, q, alpha, k).unwrap();
        let (lower, exact) = primal_direct(eps, p, q, alpha, k);
        assert!((pq.af_lower / lower - 1.0).abs() < 1e-12);
        assert!((pq.af_exact / exact - 1.0).abs() < 1e-12);
        assert!(pq.af_exact >= pq.af_lower);
    }

    #[test]
    fn primal_examples() {
        let pq = primal_quantities(0.25, 2.0, 4.0, 0.75, 80).unwrap();
        assert!((pq.fnorm - 2.0).abs() < 1e-12);
        let pq = primal_quantities(0.5, 2.0, 4.0, 0.75, 40).unwrap();
        assert!(
            (pq.characteristic - 2.0).abs() < 1e-9,
            "{}",
            pq.characteristic
        );
        for eps in [0.5, 0.1, 2f64.powi(-8)] {
            let pq = primal_quantities(eps, 2.0, 4.0, 0.75, truncation_depth(eps)).unwrap();
            let closed = primal_characteristic_closed_form(eps, 2.0, 4.0);
            assert!((pq.characteristic / closed - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn primal_lower_bound_against_power_integral() {
        // single term ≥ 2^{-(α-ε)} x^{ε-α} ε^{-1} on each shell
        let (p, q, alpha) = (2.0, 4.0, 0.75);
        for eps in [0.25, 0.05, 2f64.powi(-10)] {
            let k = truncation_depth(eps);
            let pq = primal_quantities(eps, p, q, alpha, k).unwrap();
            let bound = 2f64.powf(-q * (alpha - eps)) * eps.powf(-q) * p / (q * eps)
                * (1.0 - q * pq.tail_bound);
            assert!(pq.af_lower.powf(q) >= bound);
        }
    }

    #[test]
    fn dual_matches_direct_summation() {
        let (eps, p, q, alpha) = (0.25, 2.0, 4.0, 0.75);
        let k = truncation_depth(eps);
        let (pc, qc) = (conjugate(p), conjugate(q));
        let (mut rhs, mut lhs, mut g, mut h) = (0.0, 0.0, 0.0, 0.0);
        for l in 0..=k {
            let (a, b) = (0.5f64.powi(l as i32 + 1), 0.5f64.powi(l as i32));
            let int = |e: f64| (b.powf(e + 1.0) - a.powf(e + 1.0)) / (e + 1.0);
            g += 2f64.powf(2.0 * l as f64 * eps);
            h += dual_coefficient(eps, alpha, l).powi(2);
            rhs += (eps * g).powf(qc / 2.0) * int(eps * qc + eps - 1.0);
            lhs += h.powf(pc / 2.0) * int((1.0 - eps) * pc / q);
        }
        let dq = dual_quantities(eps, p, q, alpha, k).unwrap();
        assert!((dq.rhs_norm / rhs.powf(1.0 / qc) - 1.0).abs() < 1e-12);
        assert!((dq.lhs_norm / lhs.powf(1.0 / pc) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dual_examples() {
        let (p, q, alpha) = (2.0, 4.0, 0.75);
        for eps in [0.25, 2f64.powi(-6), 2f64.powi(-12)] {
            let k = truncation_depth(eps);
            let dq = dual_quantities(eps, p, q, alpha, k).unwrap();
            let closed = dual_characteristic_closed_form(eps, p, q);
            assert!((dq.characteristic / closed - 1.0).abs() < 1e-9);
            assert!(dual_coefficient_error(eps, alpha, k).unwrap() < 1e-12);
            assert!(dq.square_sum_sup <= 1.0 / LN_2);
            assert!(dq.tail_bound <= 1e-6, "{eps} {}", dq.tail_bound);
        }
        assert!(dual_quantities(0.5, p, q, alpha, 40).is_err());
    }

    #[test]
    fn truncation_rule_is_enforced() {
        assert!(primal_quantities(0.25, 2.0, 4.0, 0.75, 10).is_err());
        assert_eq!(truncation_depth(2f64.powi(-12)), 98304);
        assert!(primal_quantities(0.25, 2.0, 4.0, 0.75, 80).is_ok());
    }
}
