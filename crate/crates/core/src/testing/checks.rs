use serde::{Deserialize, Serialize};

use super::constants::{localized_sup, testing_constants, testing_t, testing_t_star};
use super::Instance;
use crate::dyadic::{atoms_of, AtomPartition, DyadicInterval, SparseFamily};
use crate::error::{Error, Result};
use crate::operator::{estimate_opnorm, lp_norm, AscentOptions, CubeSum, StepFunction};
use crate::weights::{ainfty, conjugate, two_weight_char, ExponentConfig, Weight};

/// One side-by-side evaluation of a comparability statement `lhs ≲ rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparabilityReport {
    pub statement: String,
    pub instance: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`; absent when the instance is trivial.
    pub ratio: Option<f64>,
    /// Set when either side vanishes; such reports are never divided.
    pub trivial: bool,
    pub branch: Option<String>,
}

impl ComparabilityReport {
    pub fn new(statement: &str, instance: String, lhs: f64, rhs: f64) -> Self {
        let trivial = lhs == 0.0 || rhs == 0.0;
        Self {
            statement: statement.to_string(),
            instance,
            lhs,
            rhs,
            ratio: (!trivial).then(|| lhs / rhs),
            trivial,
            branch: None,
        }
    }

    fn with_branch(mut self, branch: &str) -> Self {
        self.branch = Some(branch.to_string());
        self
    }
}

/// `‖A‖^r` against `T + T*` (`r < p`) or `T` (`r ≥ p`).
pub fn check_prop31(inst: &Instance, opts: &AscentOptions) -> Result<ComparabilityReport> {
    let est = estimate_opnorm(&inst.family, &inst.cfg, &inst.omega, &inst.sigma, opts)?;
    let consts = testing_constants(inst)?;
    let lhs = est.ascent_value.max(est.certified_lower).powf(inst.cfg.r);
    let (rhs, branch) = match consts.t_star {
        Some(ts) => (consts.t + ts, "r < p: T + T*"),
        None => (consts.t, "r >= p: T"),
    };
    Ok(ComparabilityReport::new("prop31", inst.describe(), lhs, rhs).with_branch(branch))
}

/// The two suprema `I` and `II` of the linearization statement, for cube
/// coefficients `c_Q` on the family members:
/// `I = sup_{‖f‖_{L^p_σ} ≤ 1} ‖Σ c_Q (∫_Q fσ)^r 1_Q‖_{L^{q/r}_ω}` and
/// `II = sup_{‖g‖_{L^{p/r}_σ} ≤ 1} ‖Σ c_Q σ(Q)^{r-1} (∫_Q gσ) 1_Q‖_{L^{q/r}_ω}`.
pub fn check_lemma32(
    family: &SparseFamily,
    c: &[f64],
    cfg: &ExponentConfig,
    omega: &Weight,
    sigma: &Weight,
    opts: &AscentOptions,
) -> Result<ComparabilityReport> {
    let (p, q, r) = (cfg.p, cfg.q, cfg.r);
    if !(1.0 < r && r < p && p <= q) {
        return Err(Error::param(format!(
            "linearization needs 1 < r < p <= q, got r={r}, p={p}, q={q}"
        )));
    }
    let members = family.members();
    let atoms = atoms_of(family, 0);
    let first = CubeSum::on_partition(atoms.clone(), members, c.to_vec(), (r, p, q), omega, sigma)?;
    let kappa2 = members
        .iter()
        .zip(c)
        .map(|(m, cq)| {
            let s = sigma.mass(m);
            if *cq == 0.0 {
                Ok(0.0)
            } else if s > 0.0 {
                Ok(cq * s.powf(r - 1.0))
            } else {
                Err(Error::degenerate(format!("sigma has zero mass on {m}")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let second = CubeSum::on_partition(atoms, members, kappa2, (1.0, p / r, q / r), omega, sigma)?;
    let one = first.maximize(opts).value.powf(r);
    let two = second.maximize(opts).value;
    let inst = format!("{} members, p={p} q={q} r={r}", members.len());
    Ok(ComparabilityReport::new("lemma32", inst, one, two))
}

/// `T(f) = Σ_Q τ_Q ⟨f⟩_Q 1_Q` over an arbitrary finite collection of dyadic
/// intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositiveDyadicOperator {
    cubes: Vec<DyadicInterval>,
    tau: Vec<f64>,
}

impl PositiveDyadicOperator {
    pub fn new(cubes: Vec<DyadicInterval>, tau: Vec<f64>) -> Result<Self> {
        if cubes.len() != tau.len() {
            return Err(Error::param("one coefficient per cube required"));
        }
        if tau.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(Error::param("coefficients must be finite and nonnegative"));
        }
        Ok(Self { cubes, tau })
    }

    pub fn cubes(&self) -> &[DyadicInterval] {
        &self.cubes
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }
}

/// Norm of `T(·σ): L^p_σ → L^q_ω` against the sum of its two testing suprema
/// `sup_R ω(R)^{-1/q'} ‖Σ_{Q⊆R} τ_Q⟨ω⟩_Q 1_Q‖_{L^{p'}_σ}` and
/// `sup_R σ(R)^{-1/p} ‖Σ_{Q⊆R} τ_Q⟨σ⟩_Q 1_Q‖_{L^q_ω}`.
pub fn lsu_check(
    op: &PositiveDyadicOperator,
    p: f64,
    q: f64,
    omega: &Weight,
    sigma: &Weight,
    opts: &AscentOptions,
) -> Result<ComparabilityReport> {
    if !(1.0 < p && p <= q && q.is_finite()) {
        return Err(Error::param(format!(
            "need 1 < p <= q < inf, got p={p}, q={q}"
        )));
    }
    let partition = AtomPartition::for_members(&op.cubes, 0);
    let kappa = op
        .cubes
        .iter()
        .zip(&op.tau)
        .map(|(c, t)| t / c.length())
        .collect();
    let lhs = CubeSum::on_partition(
        partition.clone(),
        &op.cubes,
        kappa,
        (1.0, p, q),
        omega,
        sigma,
    )?
    .maximize(opts)
    .value;
    let dual_coeff: Vec<f64> = op
        .cubes
        .iter()
        .zip(&op.tau)
        .map(|(c, t)| t * omega.mass(c) / c.length())
        .collect();
    let direct_coeff: Vec<f64> = op
        .cubes
        .iter()
        .zip(&op.tau)
        .map(|(c, t)| t * sigma.mass(c) / c.length())
        .collect();
    fn skip_empty<'a>(
        w: &'a Weight,
        cubes: &'a [DyadicInterval],
        e: f64,
    ) -> impl FnMut(usize) -> Result<Option<f64>> + 'a {
        move |i| {
            let m = w.mass(&cubes[i]);
            Ok((m > 0.0).then(|| m.powf(e)))
        }
    }
    let dual = localized_sup(
        &partition,
        &op.cubes,
        &dual_coeff,
        sigma,
        conjugate(p),
        skip_empty(omega, &op.cubes, 1.0 / conjugate(q)),
    )?
    .map_or(0.0, |(v, _)| v);
    let direct = localized_sup(
        &partition,
        &op.cubes,
        &direct_coeff,
        omega,
        q,
        skip_empty(sigma, &op.cubes, 1.0 / p),
    )?
    .map_or(0.0, |(v, _)| v);
    let inst = format!("{} cubes, p={p} q={q}", op.cubes.len());
    Ok(ComparabilityReport::new(
        "lemma34",
        inst,
        lhs,
        dual + direct,
    ))
}

/// `‖φ‖_{L^p_σ}` against `(Σ_Q a_Q (⟨φ_Q⟩_Q^σ)^{p-1} σ(Q))^{1/p}` for
/// `φ = Σ a_Q 1_Q` and `φ_Q = Σ_{Q'⊆Q} a_{Q'} 1_{Q'}`.
pub fn check_lemma41(
    cubes: &[DyadicInterval],
    coeff: &[f64],
    sigma: &Weight,
    p: f64,
) -> Result<ComparabilityReport> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::param(format!("p = {p} must lie in (1, inf)")));
    }
    if coeff.len() != cubes.len() || coeff.iter().any(|a| !(*a >= 0.0)) {
        return Err(Error::param("need one nonnegative coefficient per cube"));
    }
    let partition = AtomPartition::for_members(cubes, 0);
    let ranges = partition.member_ranges(cubes)?;
    let mut phi = vec![0.0; partition.len()];
    for (range, a) in ranges.iter().zip(coeff) {
        for x in range.clone() {
            phi[x] += a;
        }
    }
    let lhs = lp_norm(&StepFunction::new(partition, phi)?, sigma, p);
    let mut sum = 0.0;
    for (q, a) in cubes.iter().zip(coeff) {
        if *a == 0.0 {
            continue;
        }
        let sq = sigma.mass(q);
        if !(sq > 0.0) {
            return Err(Error::degenerate(format!("sigma has zero mass on {q}")));
        }
        let inner: f64 = cubes
            .iter()
            .zip(coeff)
            .filter(|(c, _)| q.contains(c))
            .map(|(c, b)| b * sigma.mass(c))
            .sum();
        sum += a * (inner / sq).powf(p - 1.0) * sq;
    }
    let inst = format!("{} cubes, p={p}", cubes.len());
    Ok(ComparabilityReport::new(
        "lemma41",
        inst,
        lhs,
        sum.powf(1.0 / p),
    ))
}

/// Exponents `(a, b, c)` of `|Q|^a σ(Q)^b ω(Q)^c`, with `a + b + c ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimateQuery {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl MeasureEstimateQuery {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a >= 0.0 && b >= 0.0 && c >= 0.0) || a + b + c < 1.0 {
            return Err(Error::param(format!(
                "need a, b, c >= 0 with a + b + c >= 1, got ({a}, {b}, {c})"
            )));
        }
        Ok(Self { a, b, c })
    }
}

/// `Σ_{Q∈S, Q⊆R} |Q|^a σ(Q)^b ω(Q)^c` against `|R|^a σ(R)^b ω(R)^c`, times
/// `[σ]_{A∞}^b [ω]_{A∞}^c` when `a = 0` (characteristics at `depth`).
pub fn check_lemma43(
    family: &SparseFamily,
    omega: &Weight,
    sigma: &Weight,
    query: &MeasureEstimateQuery,
    r: &DyadicInterval,
    depth: u32,
) -> Result<ComparabilityReport> {
    if !family.members().contains(r) {
        return Err(Error::precondition(format!("{r} is not a family member")));
    }
    let MeasureEstimateQuery { a, b, c } = *query;
    let term =
        |q: &DyadicInterval| q.length().powf(a) * sigma.mass(q).powf(b) * omega.mass(q).powf(c);
    let lhs: f64 = family
        .members_inside(r)
        .map(|i| term(&family.members()[i]))
        .sum();
    let mut rhs = term(r);
    let part = if a > 0.0 {
        "(i) a > 0"
    } else {
        let root = family.root();
        let depth = depth.max(family.max_level());
        if b > 0.0 {
            rhs *= ainfty(sigma, &root, depth)?.value.powf(b);
        }
        if c > 0.0 {
            rhs *= ainfty(omega, &root, depth)?.value.powf(c);
        }
        "(ii) a = 0"
    };
    let inst = format!("{} members, R = {r}, (a,b,c) = ({a},{b},{c})", family.len());
    Ok(ComparabilityReport::new("lemma43", inst, lhs, rhs).with_branch(part))
}

/// Both comparisons of the testing constants against characteristics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thm42Report {
    pub t: ComparabilityReport,
    /// Present only for `p > r`.
    pub t_star: Option<ComparabilityReport>,
}

/// `T` and `T*` against `[ω,σ]^r` times the appropriate powers of
/// `[σ]_{A∞}` and `[ω]_{A∞}` (characteristics at `depth`).
pub fn verify_thm42(inst: &Instance, depth: u32) -> Result<Thm42Report> {
    let cfg = &inst.cfg;
    let (p, q, r) = (cfg.p, cfg.q, cfg.r);
    if !crate::weights::feasibility(cfg).feasible {
        return Err(Error::param(crate::weights::feasibility(cfg).diagnostic));
    }
    let ch = two_weight_char(&inst.omega, &inst.sigma, cfg, &inst.family)
        .value
        .powf(r);
    let root = inst.family.root();
    let depth = depth.max(inst.family.max_level());
    let a_sigma = ainfty(&inst.sigma, &root, depth)?.value;
    let a_omega = ainfty(&inst.omega, &root, depth)?.value;
    let fractional_diagonal = p == q && cfg.alpha < 1.0;
    let desc = inst.describe();

    let (t_rhs, t_branch) = if fractional_diagonal && p > r {
        let e = (1.0 - r / p).powi(2);
        (
            ch * a_sigma.powf(1.0 - e) * a_omega.powf(e),
            "p = q, alpha < 1, p > r",
        )
    } else {
        (ch * a_sigma.powf(r / q), "generic")
    };
    let t = ComparabilityReport::new("thm42-T", desc.clone(), testing_t(inst)?.0, t_rhs)
        .with_branch(t_branch);

    let t_star = if p > r {
        let (rhs, branch) = if fractional_diagonal {
            let e = (r / p).powi(2);
            (
                ch * a_omega.powf(1.0 - e) * a_sigma.powf(e),
                "p = q, alpha < 1",
            )
        } else {
            (ch * a_omega.powf(1.0 - r / p), "generic")
        };
        Some(
            ComparabilityReport::new("thm42-T*", desc, testing_t_star(inst)?.0, rhs)
                .with_branch(branch),
        )
    } else {
        None
    };
    Ok(Thm42Report { t, t_star })
}
