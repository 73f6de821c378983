use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used to decide that `-α + 1/q + 1/p'` vanishes.
pub const SOBOLEV_TOL: f64 = 1e-12;

/// Hölder conjugate `t / (t - 1)`.
pub fn conjugate(t: f64) -> f64 {
    t / (t - 1.0)
}

/// The exponent tuple `(p, q, r, α)` with `1 < p ≤ q < ∞`, `0 < r < ∞` and
/// `0 < α ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentConfig {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub alpha: f64,
}

impl ExponentConfig {
    pub fn new(p: f64, q: f64, r: f64, alpha: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::param(format!("p = {p} must satisfy 1 < p < inf")));
        }
        if !(q >= p && q.is_finite()) {
            return Err(Error::param(format!("q = {q} must satisfy p <= q < inf")));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::param(format!("r = {r} must satisfy 0 < r < inf")));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::param(format!(
                "alpha = {alpha} must satisfy 0 < alpha <= 1"
            )));
        }
        Ok(Self { p, q, r, alpha })
    }

    /// `p' = p / (p - 1)`.
    pub fn p_conj(&self) -> f64 {
        conjugate(self.p)
    }

    /// `q' = q / (q - 1)`.
    pub fn q_conj(&self) -> f64 {
        conjugate(self.q)
    }

    /// `(p/r)'`, defined only for `p > r`.
    pub fn s(&self) -> Option<f64> {
        (self.p > self.r).then(|| conjugate(self.p / self.r))
    }

    /// `-α + 1/q + 1/p'`.
    pub fn sobolev_margin(&self) -> f64 {
        -self.alpha + 1.0 / self.q + 1.0 / self.p_conj()
    }

    pub fn is_diagonal(&self) -> bool {
        self.p == self.q
    }
}

/// Outcome of the non-triviality test for the two-weight characteristic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub feasible: bool,
    /// `-α + 1/q + 1/p'`; the class of admissible weight pairs is non-empty
    /// iff this is non-negative.
    pub margin: f64,
    pub diagonal: bool,
    /// `α = 1 + 1/q - 1/p`, the only case where Lebesgue measure is admissible.
    pub sobolev_line: bool,
    /// Admissible range `[p, p / (p(α-1) + 1)]` for `q`, present when `α > 1/p'`.
    pub q_range: Option<(f64, f64)>,
    pub diagnostic: String,
}

pub fn feasibility(cfg: &ExponentConfig) -> Feasibility {
    let margin = cfg.sobolev_margin();
    let sobolev_line = margin.abs() <= SOBOLEV_TOL;
    let feasible = margin >= -SOBOLEV_TOL;
    let diagonal = cfg.is_diagonal();
    let q_range = (cfg.alpha > 1.0 / cfg.p_conj())
        .then(|| (cfg.p, cfg.p / (cfg.p * (cfg.alpha - 1.0) + 1.0)));
    let diagnostic = if !feasible {
        let mut msg = format!(
            "infeasible: -alpha + 1/q + 1/p' = {margin:.6} < 0, so no pair of weights has a finite characteristic"
        );
        if let Some((lo, hi)) = q_range {
            msg.push_str(&format!(
                "; for alpha = {} q must lie in [{lo}, {hi}]",
                cfg.alpha
            ));
        }
        if cfg.alpha == 1.0 {
            msg.push_str("; alpha = 1 forces the diagonal case p = q");
        }
        msg
    } else if sobolev_line {
        format!(
            "feasible on the Sobolev line alpha = 1 + 1/q - 1/p = {}",
            1.0 + 1.0 / cfg.q - 1.0 / cfg.p
        )
    } else if diagonal {
        "feasible, diagonal case p = q".to_string()
    } else {
        format!("feasible with margin {margin:.6}")
    };
    Feasibility {
        feasible,
        margin,
        diagonal,
        sobolev_line,
        q_range,
        diagnostic,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_invalid_tuples() {
        assert!(ExponentConfig::new(1.0, 2.0, 1.0, 1.0).is_err());
        assert!(ExponentConfig::new(3.0, 2.0, 1.0, 1.0).is_err());
        assert!(ExponentConfig::new(2.0, 2.0, 0.0, 1.0).is_err());
        assert!(ExponentConfig::new(2.0, 2.0, 1.0, 1.5).is_err());
        assert!(ExponentConfig::new(2.0, 2.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn derived_exponents() {
        let c = ExponentConfig::new(4.0, 8.0, 2.0, 0.875).unwrap();
        assert_eq!(c.p_conj(), 4.0 / 3.0);
        assert_eq!(c.q_conj(), 8.0 / 7.0);
        assert_eq!(c.s(), Some(2.0));
        assert_eq!(ExponentConfig::new(2.0, 2.0, 2.0, 1.0).unwrap().s(), None);
    }

    #[test]
    fn feasibility_examples() {
        let f = feasibility(&ExponentConfig::new(2.0, 2.0, 1.0, 1.0).unwrap());
        assert!(f.feasible && f.diagonal);
        let f = feasibility(&ExponentConfig::new(2.0, 4.0, 1.0, 1.0).unwrap());
        assert!(!f.feasible);
        assert!(f.diagnostic.contains("diagonal"));
        let f = feasibility(&ExponentConfig::new(2.0, 4.0, 1.0, 0.75).unwrap());
        assert!(f.feasible && f.sobolev_line && !f.diagonal);
        let (lo, hi) = f.q_range.unwrap();
        assert_eq!(lo, 2.0);
        assert!((hi - 4.0).abs() < 1e-12);
    }
}
