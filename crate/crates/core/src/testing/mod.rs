//! Testing constants and numerical checks of the comparability statements
//! relating operator norms, testing constants and characteristics.

mod checks;
mod constants;

use serde::{Deserialize, Serialize};

use crate::dyadic::SparseFamily;
use crate::weights::{ExponentConfig, Weight};

pub use checks::{
    check_lemma32, check_lemma41, check_lemma43, check_prop31, lsu_check, verify_thm42,
    ComparabilityReport, MeasureEstimateQuery, PositiveDyadicOperator, Thm42Report,
};
pub use constants::{testing_constants, testing_t, testing_t_star, TestingConstants};

/// A sparse family, exponents and a weight pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub family: SparseFamily,
    pub cfg: ExponentConfig,
    pub omega: Weight,
    pub sigma: Weight,
}

impl Instance {
    pub fn describe(&self) -> String {
        let ExponentConfig { p, q, r, alpha } = self.cfg;
        format!(
            "{} members (eta {:.4}), p={p} q={q} r={r} alpha={alpha}, omega={}, sigma={}",
            self.family.len(),
            self.family.eta(),
            describe_weight(&self.omega),
            describe_weight(&self.sigma)
        )
    }
}

fn describe_weight(w: &Weight) -> String {
    match w {
        Weight::Power { scale, exponent } if *scale == 1.0 => format!("x^{exponent}"),
        Weight::Power { scale, exponent } => format!("{scale}*x^{exponent}"),
        Weight::Piecewise { values, .. } => format!("piecewise({} atoms)", values.len()),
    }
}
