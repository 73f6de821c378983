//! Seeded random-instance suites for the comparability statements.
//!
//! Instance `i` of a suite draws from its own ChaCha stream `i` under the
//! suite seed, so instances evaluate concurrently and merge by index with
//! results independent of scheduling.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{
    atoms_of, build_principal_cubes, carleson_constant, principal_domination, DyadicInterval,
    Integrand, SparseFamily,
};
use crate::error::{Error, Result};
use crate::operator::{estimate_opnorm, oracle_opnorm, theorem_rhs, AscentOptions, StepFunction};
use crate::testing::{
    check_lemma32, check_lemma41, check_lemma43, check_prop31, lsu_check, verify_thm42, Instance,
    MeasureEstimateQuery, PositiveDyadicOperator,
};
use crate::weights::{ainfty, conjugate, two_weight_char, ExponentConfig, Weight};

/// Depth of the dyadic tree random families are drawn from.
pub const FAMILY_DEPTH: u32 = 6;
/// Random families are rejected unless their Carleson constant is at most this.
pub const MAX_CARLESON: f64 = 4.0;
/// Depth of the `A∞` characteristics used by the suites.
pub const AINFTY_DEPTH: u32 = 10;
/// Angular step of the brute-force oracle in the oracle suite.
pub const ORACLE_GRID: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Prop31,
    Lemma32,
    Lemma34,
    Lemma41,
    Lemma43,
    Principal,
    Thm42,
    Thm11,
    /// Ascent against the brute-force oracle on families with at most three atoms.
    Oracle,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Prop31,
        Suite::Lemma32,
        Suite::Lemma34,
        Suite::Lemma41,
        Suite::Lemma43,
        Suite::Principal,
        Suite::Thm42,
        Suite::Thm11,
        Suite::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Prop31 => "prop31",
            Suite::Lemma32 => "lemma32",
            Suite::Lemma34 => "lemma34",
            Suite::Lemma41 => "lemma41",
            Suite::Lemma43 => "lemma43",
            Suite::Principal => "principal",
            Suite::Thm42 => "thm42",
            Suite::Thm11 => "thm11",
            Suite::Oracle => "oracle",
        }
    }

    /// The statement each suite checks, echoed in reports.
    pub fn statement(self) -> &'static str {
        match self {
            Suite::Prop31 => "operator norm^r <~ T + T* (r < p) or T (r >= p)",
            Suite::Lemma32 => "linearization suprema I and II are comparable",
            Suite::Lemma34 => "positive dyadic operator norm ~ sum of its two testing suprema",
            Suite::Lemma41 => "dyadic-sum formula for ||phi||_{L^p_sigma}",
            Suite::Lemma43 => "measure estimate for sums over sparse subfamilies",
            Suite::Principal => "principal cubes: sum_F <f>_F^p 1_F <= (1-2^-p)^-1 (M_sigma f)^p",
            Suite::Thm42 => "testing constants <~ characteristic^r times A-infinity powers",
            Suite::Thm11 => {
                "indicator lower bound >= two-weight characteristic; norm <~ theorem rhs"
            }
            Suite::Oracle => "ascent estimate matches brute-force oracle on <= 3 atoms",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::param(format!("unknown suite '{s}'")))
    }
}

/// One compared quantity of one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRow {
    pub instance: usize,
    pub quantity: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: Option<f64>,
}

/// Observed range of one quantity's ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub seed: u64,
    pub trials: usize,
    pub rows: Vec<SuiteRow>,
    /// Ratio ranges per quantity over the non-trivial rows.
    pub ranges: BTreeMap<String, RatioRange>,
    /// Failures of exact (non-baseline) checks.
    pub violations: Vec<String>,
}

struct Trial {
    rows: Vec<SuiteRow>,
    violations: Vec<String>,
}

impl Trial {
    fn new() -> Self {
        Self {
            rows: Vec::new(),
            violations: Vec::new(),
        }
    }

    fn row(&mut self, instance: usize, quantity: &str, lhs: f64, rhs: f64) {
        let ratio = (lhs != 0.0 && rhs != 0.0).then(|| lhs / rhs);
        self.rows.push(SuiteRow {
            instance,
            quantity: quantity.to_string(),
            lhs,
            rhs,
            ratio,
        });
    }
}

fn instance_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..=hi.ln())).exp()
}

/// A random subset of the dyadic tree to `depth` containing the root, with
/// Carleson constant at most [`MAX_CARLESON`].
pub fn random_family(rng: &mut impl Rng, depth: u32) -> SparseFamily {
    loop {
        let density = rng.gen_range(0.1..0.4);
        let mut members = vec![DyadicInterval::UNIT];
        for level in 1..=depth {
            for q in DyadicInterval::UNIT.descendants_at(level) {
                if rng.gen_bool(density) {
                    members.push(q);
                }
            }
        }
        let family = SparseFamily::certified(members).expect("distinct dyadic intervals");
        if carleson_constant(&family) <= MAX_CARLESON {
            return family;
        }
    }
}

/// Piecewise constant on the uniform partition at `depth`, values
/// log-uniform in `[1e-2, 1e2]`.
pub fn random_piecewise(rng: &mut impl Rng, depth: u32) -> Weight {
    let values = (0..1usize << depth)
        .map(|_| log_uniform(rng, 1e-2, 1e2))
        .collect();
    Weight::uniform_piecewise(depth, values).expect("positive values")
}

/// Mostly piecewise weights; one in four is a power weight `x^β`.
pub fn random_weight(rng: &mut impl Rng) -> Weight {
    if rng.gen_bool(0.25) {
        Weight::power(rng.gen_range(-0.8..1.5)).expect("exponent above -1")
    } else {
        random_piecewise(rng, FAMILY_DEPTH)
    }
}

/// Random feasible exponents; one in three is diagonal.
pub fn random_config(rng: &mut impl Rng) -> ExponentConfig {
    let p = rng.gen_range(1.2..4.0);
    let q = if rng.gen_bool(1.0 / 3.0) {
        p
    } else {
        p * rng.gen_range(1.0..2.0)
    };
    let r = log_uniform(rng, 0.5, 4.0);
    let top = (1.0 / q + 1.0 / conjugate(p)).min(1.0);
    let alpha = rng.gen_range(0.2 * top..=top);
    ExponentConfig::new(p, q, r, alpha).expect("sampled within range")
}

fn random_instance(rng: &mut impl Rng) -> Instance {
    let family = random_family(rng, FAMILY_DEPTH);
    let cfg = random_config(rng);
    Instance {
        family,
        cfg,
        omega: random_weight(rng),
        sigma: random_weight(rng),
    }
}

/// Families with at most three atoms: random subsets of the depth-2 tree
/// containing the root.
fn random_small_family(rng: &mut impl Rng) -> SparseFamily {
    loop {
        let family = random_family(rng, 2);
        if atoms_of(&family, 0).len() <= 3 {
            return family;
        }
    }
}

fn ascent_options(seed: u64, index: usize) -> AscentOptions {
    AscentOptions {
        seed: seed.wrapping_mul(1_000_003).wrapping_add(index as u64),
        ..AscentOptions::default()
    }
}

fn run_trial(suite: Suite, seed: u64, i: usize) -> Result<Trial> {
    let mut rng = instance_rng(seed, i);
    let opts = ascent_options(seed, i);
    let mut trial = Trial::new();
    match suite {
        Suite::Prop31 => {
            let inst = random_instance(&mut rng);
            let rep = check_prop31(&inst, &opts)?;
            trial.row(i, "ratio", rep.lhs, rep.rhs);
        }
        Suite::Lemma32 => {
            let family = random_family(&mut rng, FAMILY_DEPTH);
            let p = rng.gen_range(2.0..5.0);
            let q = if rng.gen_bool(0.5) {
                p
            } else {
                p * rng.gen_range(1.0..2.0)
            };
            let r = rng.gen_range(1.1..p - 0.5);
            let alpha = rng.gen_range(0.2..=1.0);
            let cfg = ExponentConfig::new(p, q, r, alpha)?;
            let c: Vec<f64> = family
                .members()
                .iter()
                .map(|m| m.length().powf(-alpha * r) * log_uniform(&mut rng, 0.1, 10.0))
                .collect();
            let omega = random_weight(&mut rng);
            let sigma = random_weight(&mut rng);
            let rep = check_lemma32(&family, &c, &cfg, &omega, &sigma, &opts)?;
            trial.row(i, "ratio", rep.lhs, rep.rhs);
        }
        Suite::Lemma34 => {
            let family = random_family(&mut rng, FAMILY_DEPTH);
            let tau: Vec<f64> = family
                .members()
                .iter()
                .map(|_| log_uniform(&mut rng, 1e-2, 1e2))
                .collect();
            let op = PositiveDyadicOperator::new(family.members().to_vec(), tau)?;
            let p = rng.gen_range(1.2..4.0);
            let q = if rng.gen_bool(0.5) {
                p
            } else {
                p * rng.gen_range(1.0..2.0)
            };
            let omega = random_weight(&mut rng);
            let sigma = random_weight(&mut rng);
            let rep = lsu_check(&op, p, q, &omega, &sigma, &opts)?;
            trial.row(i, "ratio", rep.lhs, rep.rhs);
        }
        Suite::Lemma41 => {
            let family = random_family(&mut rng, FAMILY_DEPTH);
            let coeff: Vec<f64> = family
                .members()
                .iter()
                .map(|_| log_uniform(&mut rng, 1e-2, 1e2))
                .collect();
            let sigma = random_weight(&mut rng);
            let p = rng.gen_range(1.2..5.0);
            let rep = check_lemma41(family.members(), &coeff, &sigma, p)?;
            trial.row(i, "ratio", rep.lhs, rep.rhs);
        }
        Suite::Lemma43 => {
            let family = random_family(&mut rng, FAMILY_DEPTH);
            let omega = random_weight(&mut rng);
            let sigma = random_weight(&mut rng);
            let r = family.members()[rng.gen_range(0..family.len())];
            // part (i): a > 0
            let a = rng.gen_range(0.25..=1.0);
            let b = rng.gen_range(0.0..=1.0 - a);
            let c = 1.0 - a - b;
            let scale = rng.gen_range(1.0..1.5);
            let query = MeasureEstimateQuery::new(a * scale, b * scale, c.max(0.0) * scale)?;
            let rep = check_lemma43(&family, &omega, &sigma, &query, &r, AINFTY_DEPTH)?;
            trial.row(i, "ratio_i", rep.lhs, rep.rhs);
            // part (ii): a = 0
            let b = rng.gen_range(0.0..=1.0);
            let query = MeasureEstimateQuery::new(0.0, b * scale, (1.0 - b) * scale)?;
            let rep = check_lemma43(&family, &omega, &sigma, &query, &r, AINFTY_DEPTH)?;
            trial.row(i, "ratio_ii", rep.lhs, rep.rhs);
        }
        Suite::Principal => {
            let family = random_family(&mut rng, FAMILY_DEPTH);
            let sigma = random_weight(&mut rng);
            let values = (0..1usize << FAMILY_DEPTH)
                .map(|_| log_uniform(&mut rng, 1e-2, 1e2))
                .collect();
            let f = StepFunction::new(crate::dyadic::AtomPartition::uniform(FAMILY_DEPTH), values)?;
            let p = rng.gen_range(1.2..5.0);
            let stopping = build_principal_cubes(&family, &Integrand::Step(f), &sigma)?;
            let rep = principal_domination(&stopping, &sigma, p);
            trial.row(i, "pointwise", rep.max_pointwise_ratio, rep.constant);
            trial.row(i, "integrated", rep.principal_sum, rep.maximal_integral);
            if !rep.holds() {
                trial.violations.push(format!(
                    "instance {i}: pointwise ratio {} exceeds (1-2^-p)^-1 = {}",
                    rep.max_pointwise_ratio, rep.constant
                ));
            }
        }
        Suite::Thm42 => {
            let mut inst = random_instance(&mut rng);
            if rng.gen_bool(0.3) {
                // exercise the fractional diagonal branch
                let p = inst.cfg.p;
                let r = rng.gen_range(0.5..p);
                inst.cfg = ExponentConfig::new(p, p, r, rng.gen_range(0.2..0.95))?;
            }
            let rep = verify_thm42(&inst, AINFTY_DEPTH)?;
            trial.row(i, "ratio_t", rep.t.lhs, rep.t.rhs);
            if let Some(ts) = rep.t_star {
                trial.row(i, "ratio_tstar", ts.lhs, ts.rhs);
            }
        }
        Suite::Thm11 => {
            let inst = random_instance(&mut rng);
            let est = estimate_opnorm(&inst.family, &inst.cfg, &inst.omega, &inst.sigma, &opts)?;
            let ch = two_weight_char(&inst.omega, &inst.sigma, &inst.cfg, &inst.family).value;
            let root = inst.family.root();
            let depth = AINFTY_DEPTH.max(inst.family.max_level());
            let a_sigma = ainfty(&inst.sigma, &root, depth)?.value;
            let a_omega = ainfty(&inst.omega, &root, depth)?.value;
            let rhs = theorem_rhs(&inst.cfg, ch, a_sigma, a_omega).value;
            let estimate = est.ascent_value;
            trial.row(i, "lower_vs_char", est.certified_lower, ch);
            trial.row(i, "estimate_vs_lower", estimate, est.certified_lower);
            trial.row(i, "ratio", estimate, rhs);
            if !(est.certified_lower >= ch * (1.0 - 1e-12)) {
                trial.violations.push(format!(
                    "instance {i}: indicator lower bound {} below characteristic {ch}",
                    est.certified_lower
                ));
            }
            if !(estimate >= est.certified_lower * (1.0 - 1e-9)) {
                trial.violations.push(format!(
                    "instance {i}: estimate {estimate} below certified lower bound {}",
                    est.certified_lower
                ));
            }
        }
        Suite::Oracle => {
            let family = random_small_family(&mut rng);
            let cfg = random_config(&mut rng);
            let omega = random_small_weight(&mut rng);
            let sigma = random_small_weight(&mut rng);
            let est = estimate_opnorm(&family, &cfg, &omega, &sigma, &opts)?;
            let oracle = oracle_opnorm(&family, &cfg, &omega, &sigma, ORACLE_GRID)?;
            trial.row(i, "estimate_vs_oracle", est.ascent_value, oracle);
            if !((est.ascent_value - oracle).abs() <= 1e-4 * oracle) {
                trial.violations.push(format!(
                    "instance {i}: estimate {} differs from oracle {oracle}",
                    est.ascent_value
                ));
            }
        }
    }
    Ok(trial)
}

fn random_small_weight(rng: &mut impl Rng) -> Weight {
    if rng.gen_bool(0.25) {
        Weight::power(rng.gen_range(-0.8..1.5)).expect("exponent above -1")
    } else {
        random_piecewise(rng, 2)
    }
}

/// Runs `trials` seeded instances of `suite` in parallel.
pub fn run_suite(suite: Suite, seed: u64, trials: usize) -> Result<SuiteOutcome> {
    if trials == 0 {
        return Err(Error::param("trials must be at least 1"));
    }
    let results = (0..trials)
        .into_par_iter()
        .map(|i| run_trial(suite, seed, i))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for t in results {
        rows.extend(t.rows);
        violations.extend(t.violations);
    }
    let mut ranges: BTreeMap<String, RatioRange> = BTreeMap::new();
    for row in &rows {
        if let Some(ratio) = row.ratio {
            ranges
                .entry(row.quantity.clone())
                .and_modify(|r| {
                    r.min = r.min.min(ratio);
                    r.max = r.max.max(ratio);
                    r.count += 1;
                })
                .or_insert(RatioRange {
                    min: ratio,
                    max: ratio,
                    count: 1,
                });
        }
    }
    Ok(SuiteOutcome {
        suite,
        seed,
        trials,
        rows,
        ranges,
        violations,
    })
}
