use serde::{Deserialize, Serialize};

use super::Instance;
use crate::dyadic::{atoms_of, AtomPartition, DyadicInterval};
use crate::error::{Error, Result};
use crate::weights::{conjugate, Weight};

/// `sup_R ‖Σ_{Q⊆R} coeff_Q 1_Q‖_{L^e_w} / normalizer(R)` over `R` in `cubes`.
///
/// `normalizer` returns `None` for cubes to skip. Works for `e < 1` as well
/// (quasi-norm); no triangle inequality is used. Returns the value and the
/// index of the attaining cube, or `None` when every cube was skipped.
pub(crate) fn localized_sup(
    partition: &AtomPartition,
    cubes: &[DyadicInterval],
    coeff: &[f64],
    w: &Weight,
    e: f64,
    mut normalizer: impl FnMut(usize) -> Result<Option<f64>>,
) -> Result<Option<(f64, usize)>> {
    let ranges = partition.member_ranges(cubes)?;
    let w_atoms: Vec<f64> = partition.atoms().iter().map(|a| w.mass(a)).collect();
    let mut best: Option<(f64, usize)> = None;
    for (ri, (r, r_range)) in cubes.iter().zip(&ranges).enumerate() {
        let Some(norm) = normalizer(ri)? else {
            continue;
        };
        let mut phi = vec![0.0; r_range.len()];
        for ((q, q_range), c) in cubes.iter().zip(&ranges).zip(coeff) {
            if r.contains(q) {
                for a in q_range.clone() {
                    phi[a - r_range.start] += c;
                }
            }
        }
        let value = scaled_norm(&phi, &w_atoms[r_range.clone()], e) / norm;
        if best.is_none_or(|(b, _)| value > b) {
            best = Some((value, ri));
        }
    }
    Ok(best)
}

/// `(Σ |v_a|^e w_a)^{1/e}`, factoring out `max |v_a|` so that large
/// exponents do not overflow.
pub(crate) fn scaled_norm(values: &[f64], masses: &[f64], e: f64) -> f64 {
    let top = values
        .iter()
        .zip(masses)
        .filter(|(_, m)| **m > 0.0)
        .fold(0.0f64, |t, (v, _)| t.max(v.abs()));
    if top == 0.0 {
        return 0.0;
    }
    let sum: f64 = values
        .iter()
        .zip(masses)
        .filter(|(v, m)| **v != 0.0 && **m > 0.0)
        .map(|(v, m)| (v.abs() / top).powf(e) * m)
        .sum();
    top * sum.powf(1.0 / e)
}

/// The two testing constants that control the operator norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestingConstants {
    pub t: f64,
    pub t_attained_at: DyadicInterval,
    /// Present only for `p > r`.
    pub t_star: Option<f64>,
    pub t_star_attained_at: Option<DyadicInterval>,
}

/// `T = sup_R σ(R)^{-r/p} ‖Σ_{Q⊆R} |Q|^{-αr} σ(Q)^r 1_Q‖_{L^{q/r}_ω}`.
pub fn testing_t(inst: &Instance) -> Result<(f64, DyadicInterval)> {
    let Instance {
        family,
        cfg,
        omega,
        sigma,
    } = inst;
    let members = family.members();
    let coeff: Vec<f64> = members
        .iter()
        .map(|q| q.length().powf(-cfg.alpha * cfg.r) * sigma.mass(q).powf(cfg.r))
        .collect();
    let best = localized_sup(
        &atoms_of(family, 0),
        members,
        &coeff,
        omega,
        cfg.q / cfg.r,
        |i| {
            let s = sigma.mass(&members[i]);
            if s > 0.0 {
                Ok(Some(s.powf(cfg.r / cfg.p)))
            } else {
                Err(Error::degenerate(format!(
                    "sigma has zero mass on {}",
                    members[i]
                )))
            }
        },
    )?;
    let (value, i) = best.ok_or_else(|| Error::degenerate("empty family"))?;
    Ok((value, members[i]))
}

/// `T* = sup_R ω(R)^{-1/(q/r)'} ‖Σ_{Q⊆R} |Q|^{-αr} σ(Q)^{r-1} ω(Q) 1_Q‖_{L^{(p/r)'}_σ}`,
/// used only when `p > r`.
pub fn testing_t_star(inst: &Instance) -> Result<(f64, DyadicInterval)> {
    let Instance {
        family,
        cfg,
        omega,
        sigma,
    } = inst;
    let s = cfg
        .s()
        .ok_or_else(|| Error::precondition("T* is only used for p > r"))?;
    let members = family.members();
    let coeff = members
        .iter()
        .map(|q| {
            let sq = sigma.mass(q);
            if sq > 0.0 {
                Ok(q.length().powf(-cfg.alpha * cfg.r) * sq.powf(cfg.r - 1.0) * omega.mass(q))
            } else {
                Err(Error::degenerate(format!("sigma has zero mass on {q}")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let outer = conjugate(cfg.q / cfg.r);
    let best = localized_sup(&atoms_of(family, 0), members, &coeff, sigma, s, |i| {
        let w = omega.mass(&members[i]);
        if w > 0.0 {
            Ok(Some(w.powf(1.0 / outer)))
        } else {
            Err(Error::degenerate(format!(
                "omega has zero mass on {}",
                members[i]
            )))
        }
    })?;
    let (value, i) = best.ok_or_else(|| Error::degenerate("empty family"))?;
    Ok((value, members[i]))
}

pub fn testing_constants(inst: &Instance) -> Result<TestingConstants> {
    let (t, t_attained_at) = testing_t(inst)?;
    let star = if inst.cfg.p > inst.cfg.r {
        Some(testing_t_star(inst)?)
    } else {
        None
    };
    Ok(TestingConstants {
        t,
        t_attained_at,
        t_star: star.map(|s| s.0),
        t_star_attained_at: star.map(|s| s.1),
    })
}
