use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::cube_sum::{AscentOptions, CubeSum};
use super::step::{lp_norm, StepFunction};
use crate::dyadic::{atoms_of, DyadicInterval, SparseFamily};
use crate::error::{Error, Result};
use crate::weights::{ExponentConfig, Weight};

/// `A^{r,α}_S(fσ)`: on each atom `a`, `(Σ_{Q∋a} (|Q|^{-α} |∫_Q f dσ|)^r)^{1/r}`.
pub fn apply(
    family: &SparseFamily,
    cfg: &ExponentConfig,
    sigma: &Weight,
    f: &StepFunction,
) -> Result<StepFunction> {
    let partition = f.partition();
    let ranges = partition
        .member_ranges(family.members())
        .map_err(|e| Error::precondition(e.to_string()))?;
    let weighted: Vec<f64> = partition
        .atoms()
        .iter()
        .zip(f.values())
        .map(|(a, v)| v * sigma.mass(a))
        .collect();
    let mut sum = vec![0.0; partition.len()];
    for (q, range) in family.members().iter().zip(ranges) {
        let integral: f64 = weighted[range.clone()].iter().sum();
        let term = (q.length().powf(-cfg.alpha) * integral.abs()).powf(cfg.r);
        for a in range {
            sum[a] += term;
        }
    }
    StepFunction::new(
        partition.clone(),
        sum.into_iter().map(|s| s.powf(1.0 / cfg.r)).collect(),
    )
}

/// The sparse operator as a [`CubeSum`] on `atoms_of(S)`.
pub fn sparse_cube_sum(
    family: &SparseFamily,
    cfg: &ExponentConfig,
    omega: &Weight,
    sigma: &Weight,
) -> Result<CubeSum> {
    let kappa = family
        .members()
        .iter()
        .map(|q| q.length().powf(-cfg.alpha * cfg.r))
        .collect();
    CubeSum::on_partition(
        atoms_of(family, 0),
        family.members(),
        kappa,
        (cfg.r, cfg.p, cfg.q),
        omega,
        sigma,
    )
}

fn require_positive_sigma(family: &SparseFamily, sigma: &Weight) -> Result<()> {
    match family.members().iter().find(|q| !(sigma.mass(q) > 0.0)) {
        Some(q) => Err(Error::degenerate(format!("sigma has zero mass on {q}"))),
        None => Ok(()),
    }
}

/// `max_{Q∈S} ‖A(1_Q σ)‖_{L^q_ω} / σ(Q)^{1/p}` with the attaining cube.
pub fn indicator_lower_bound_at(
    family: &SparseFamily,
    cfg: &ExponentConfig,
    omega: &Weight,
    sigma: &Weight,
) -> Result<(f64, DyadicInterval)> {
    require_positive_sigma(family, sigma)?;
    let atoms = atoms_of(family, 0);
    let mut best = (f64::NEG_INFINITY, DyadicInterval::UNIT);
    for q in family.members() {
        let f = StepFunction::indicator(atoms.clone(), q)?;
        let ratio = lp_norm(&apply(family, cfg, sigma, &f)?, omega, cfg.q)
            / sigma.mass(q).powf(1.0 / cfg.p);
        if ratio > best.0 {
            best = (ratio, *q);
        }
    }
    Ok(best)
}

/// Certified lower bound for the operator norm from indicator test functions.
pub fn indicator_lower_bound(
    family: &SparseFamily,
    cfg: &ExponentConfig,
    omega: &Weight,
    sigma: &Weight,
) -> Result<f64> {
    indicator_lower_bound_at(family, cfg, omega, sigma).map(|(v, _)| v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpNormEstimate {
    pub certified_lower: f64,
    pub ascent_value: f64,
    pub maximizer: StepFunction,
    pub restarts: usize,
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
}

/// Estimates `‖A^{r,α}_S(·σ)‖_{L^p_σ → L^q_ω}` by multi-start ascent over
/// nonnegative functions on the atoms of `S`. Atom-measurable functions are
/// enough: conditional expectation onto the atoms keeps every `∫_Q fσ` and
/// does not increase `‖f‖_{L^p_σ}`.
pub fn estimate_opnorm(
    family: &SparseFamily,
    cfg: &ExponentConfig,
    omega: &Weight,
    sigma: &Weight,
    opts: &AscentOptions,
) -> Result<OpNormEstimate> {
    let certified_lower = indicator_lower_bound(family, cfg, omega, sigma)?;
    let op = sparse_cube_sum(family, cfg, omega, sigma)?;
    let best = op.maximize(opts);
    Ok(OpNormEstimate {
        certified_lower,
        ascent_value: best.value,
        maximizer: StepFunction::new(op.partition().clone(), best.values)?,
        restarts: opts.restarts.max(1),
        iterations: best.iterations,
        converged: best.converged,
        seed: opts.seed,
    })
}

/// Maximum atom count accepted by [`oracle_opnorm`].
pub const ORACLE_MAX_ATOMS: usize = 3;

/// Brute-force operator norm for families with at most three atoms: grid
/// search over nonnegative directions, parametrized by angles on the positive
/// part of the sphere, at angular step `grid_res`, followed by repeated local
/// zooming around the best grid point. Ratios are evaluated through
/// [`apply`] and [`lp_norm`] only.
pub fn oracle_opnorm(
    family: &SparseFamily,
    cfg: &ExponentConfig,
    omega: &Weight,
    sigma: &Weight,
    grid_res: f64,
) -> Result<f64> {
    let atoms = atoms_of(family, 0);
    if atoms.len() > ORACLE_MAX_ATOMS {
        return Err(Error::precondition(format!(
            "oracle needs at most {ORACLE_MAX_ATOMS} atoms, family has {}",
            atoms.len()
        )));
    }
    if !(grid_res > 0.0 && grid_res < 1.0) {
        return Err(Error::param("grid resolution must lie in (0, 1)"));
    }
    let ratio = |angles: &[f64]| -> f64 {
        let values = direction(atoms.len(), angles);
        let f = StepFunction::new(atoms.clone(), values).expect("finite direction");
        let den = lp_norm(&f, sigma, cfg.p);
        if den == 0.0 {
            return 0.0;
        }
        let af = apply(family, cfg, sigma, &f).expect("atoms of the family");
        lp_norm(&af, omega, cfg.q) / den
    };
    let dims = atoms.len() - 1;
    if dims == 0 {
        return Ok(ratio(&[]));
    }
    let steps = (FRAC_PI_2 / grid_res).ceil() as usize;
    let mut best = (f64::NEG_INFINITY, vec![0.0; dims]);
    let consider = |angles: Vec<f64>, best: &mut (f64, Vec<f64>)| {
        let v = ratio(&angles);
        if v > best.0 {
            *best = (v, angles);
        }
    };
    let grid = |i: usize| (i as f64 * FRAC_PI_2 / steps as f64).min(FRAC_PI_2);
    if dims == 1 {
        for i in 0..=steps {
            consider(vec![grid(i)], &mut best);
        }
    } else {
        for i in 0..=steps {
            for j in 0..=steps {
                consider(vec![grid(i), grid(j)], &mut best);
            }
        }
    }
    let mut h = FRAC_PI_2 / steps as f64;
    const ZOOM_POINTS: i32 = 10;
    while h > 1e-12 {
        let center = best.1.clone();
        let local = 2.0 * h / ZOOM_POINTS as f64;
        let offsets: Vec<f64> = (-ZOOM_POINTS..=ZOOM_POINTS)
            .map(|k| k as f64 * local / 2.0)
            .collect();
        let clamp = |x: f64| x.clamp(0.0, FRAC_PI_2);
        if dims == 1 {
            for o in &offsets {
                consider(vec![clamp(center[0] + o)], &mut best);
            }
        } else {
            for o in &offsets {
                for o2 in &offsets {
                    consider(vec![clamp(center[0] + o), clamp(center[1] + o2)], &mut best);
                }
            }
        }
        h = local;
    }
    Ok(best.0)
}

fn direction(n: usize, angles: &[f64]) -> Vec<f64> {
    match n {
        1 => vec![1.0],
        2 => vec![angles[0].cos(), angles[0].sin()],
        _ => {
            let (t, p) = (angles[0], angles[1]);
            vec![t.cos(), t.sin() * p.cos(), t.sin() * p.sin()]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhsBranch {
    /// `char·([σ]_{A∞}^{1/q} + [ω]_{A∞}^{(1/r-1/p)_+})`.
    Generic,
    /// `p = q > r` and `α < 1`.
    DiagonalFractional,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremRhs {
    pub value: f64,
    pub branch: RhsBranch,
}

/// Upper bound for the operator norm in terms of the two-weight
/// characteristic and the `A∞` characteristics of `σ` and `ω`, up to an
/// unquantified constant.
pub fn theorem_rhs(cfg: &ExponentConfig, char: f64, a_sigma: f64, a_omega: f64) -> TheoremRhs {
    let (p, q, r) = (cfg.p, cfg.q, cfg.r);
    if p == q && p > r && cfg.alpha < 1.0 {
        let t = (1.0 - r / p).powi(2);
        let u = (r / p).powi(2);
        let value = char
            * (a_omega.powf(t / r) * a_sigma.powf((1.0 - t) / r)
                + a_omega.powf((1.0 - u) / r) * a_sigma.powf(u / r));
        TheoremRhs {
            value,
            branch: RhsBranch::DiagonalFractional,
        }
    } else {
        let value = char * (a_sigma.powf(1.0 / q) + a_omega.powf((1.0 / r - 1.0 / p).max(0.0)));
        TheoremRhs {
            value,
            branch: RhsBranch::Generic,
        }
    }
}
