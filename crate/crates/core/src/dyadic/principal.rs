use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::{atoms_of, DyadicInterval, SparseFamily};
use crate::error::{Error, Result};
use crate::operator::StepFunction;
use crate::weights::Weight;

/// Relative slack in the stopping rule `⟨f⟩_Q > 2⟨f⟩_F`, so that exact ties
/// do not flip on rounding.
pub const STOPPING_TOL: f64 = 1e-12;

/// A nonnegative function whose `σ`-integrals over dyadic intervals are exact.
#[derive(Debug, Clone, PartialEq)]
pub enum Integrand {
    Step(StepFunction),
    /// `x^exponent` on `[0, 1)`.
    Power {
        exponent: f64,
    },
}

impl Integrand {
    /// `∫_Q f dσ`.
    pub fn integral(&self, sigma: &Weight, q: &DyadicInterval) -> Result<f64> {
        match self {
            Integrand::Step(f) => f.integral(sigma, q),
            Integrand::Power { exponent } => Ok(sigma.power_moment(*exponent, q)),
        }
    }

    fn is_nonnegative(&self) -> bool {
        match self {
            Integrand::Step(f) => f.is_nonnegative(),
            Integrand::Power { .. } => true,
        }
    }
}

/// Principal (stopping) cubes of a function `f` with respect to `σ`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StoppingFamily {
    family: SparseFamily,
    averages: Vec<f64>,
    /// Member indices of the principal cubes, generation by generation.
    principals: Vec<usize>,
    /// `π(Q)` for every member, as a member index.
    parent: Vec<usize>,
    children: BTreeMap<usize, Vec<usize>>,
}

impl StoppingFamily {
    pub fn family(&self) -> &SparseFamily {
        &self.family
    }

    /// `⟨f⟩_Q^σ` for each member.
    pub fn averages(&self) -> &[f64] {
        &self.averages
    }

    pub fn principals(&self) -> &[usize] {
        &self.principals
    }

    pub fn principal_intervals(&self) -> Vec<DyadicInterval> {
        self.principals
            .iter()
            .map(|&i| self.family.members()[i])
            .collect()
    }

    /// `π(Q)`: the minimal principal cube containing member `q`.
    pub fn parent(&self, q: usize) -> usize {
        self.parent[q]
    }

    /// `ch_F(F)`.
    pub fn stopping_children(&self, principal: usize) -> &[usize] {
        self.children.get(&principal).map_or(&[], Vec::as_slice)
    }

    pub fn is_principal(&self, q: usize) -> bool {
        self.children.contains_key(&q)
    }
}

/// Builds `F = ∪ F_k` with `F_0` the maximal members and `F_{k+1}` the
/// maximal members `Q ⊊ F` with `⟨f⟩_Q^σ > 2⟨f⟩_F^σ`, for `F ∈ F_k`.
pub fn build_principal_cubes(
    family: &SparseFamily,
    f: &Integrand,
    sigma: &Weight,
) -> Result<StoppingFamily> {
    if !f.is_nonnegative() {
        return Err(Error::precondition("principal cubes need f >= 0"));
    }
    let members = family.members();
    let averages = members
        .iter()
        .map(|q| {
            let mass = sigma.mass(q);
            if !(mass > 0.0) {
                return Err(Error::degenerate(format!("sigma has zero mass on {q}")));
            }
            Ok(f.integral(sigma, q)? / mass)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut principals = Vec::new();
    let mut children = BTreeMap::new();
    let mut queue: VecDeque<usize> = family.maximal().into();
    while let Some(top) = queue.pop_front() {
        principals.push(top);
        let threshold = 2.0 * averages[top] * (1.0 + STOPPING_TOL);
        let outer = members[top];
        let candidates: Vec<usize> = (0..members.len())
            .filter(|&i| i != top && outer.contains(&members[i]) && averages[i] > threshold)
            .collect();
        let chosen: Vec<usize> = candidates
            .iter()
            .copied()
            .filter(|&i| {
                !candidates
                    .iter()
                    .any(|&j| j != i && members[j].contains(&members[i]))
            })
            .collect();
        queue.extend(&chosen);
        children.insert(top, chosen);
    }

    let parent = members
        .iter()
        .map(|q| {
            principals
                .iter()
                .copied()
                .filter(|&f| members[f].contains(q))
                .max_by_key(|&f| members[f].level())
                .expect("every member lies in a maximal member")
        })
        .collect();

    Ok(StoppingFamily {
        family: family.clone(),
        averages,
        principals,
        parent,
        children,
    })
}

/// Exact check of `Σ_{F∋x} (⟨f⟩_F^σ)^p ≤ (1 - 2^{-p})^{-1} (M_σ f(x))^p` on
/// the atoms of the family, with `M_σ` the dyadic `σ`-maximal function over
/// family members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    /// `(1 - 2^{-p})^{-1}`.
    pub constant: f64,
    /// `max_x Σ_{F∋x} (⟨f⟩_F)^p / (M_σ f(x))^p` over atoms covered by the family.
    pub max_pointwise_ratio: f64,
    /// `Σ_F (⟨f⟩_F^σ)^p σ(F)`.
    pub principal_sum: f64,
    /// `∫ (M_σ f)^p dσ`.
    pub maximal_integral: f64,
}

impl DominationReport {
    pub fn holds(&self) -> bool {
        self.max_pointwise_ratio <= self.constant
            && self.principal_sum <= self.constant * self.maximal_integral * (1.0 + 1e-12)
    }
}

pub fn principal_domination(stopping: &StoppingFamily, sigma: &Weight, p: f64) -> DominationReport {
    let family = &stopping.family;
    let atoms = atoms_of(family, 0);
    let ranges = atoms
        .member_ranges(family.members())
        .expect("family atoms refine the family");
    let n = atoms.len();
    let mut principal = vec![0.0; n];
    let mut maximal = vec![0.0f64; n];
    for (i, range) in ranges.iter().enumerate() {
        let a = stopping.averages[i];
        for x in range.clone() {
            maximal[x] = maximal[x].max(a);
            if stopping.is_principal(i) {
                principal[x] += a.powf(p);
            }
        }
    }
    let mut max_ratio: f64 = 0.0;
    let mut maximal_integral = 0.0;
    for x in 0..n {
        if maximal[x] > 0.0 {
            max_ratio = max_ratio.max(principal[x] / maximal[x].powf(p));
        }
        maximal_integral += maximal[x].powf(p) * sigma.mass(&atoms.atoms()[x]);
    }
    let principal_sum = stopping
        .principals
        .iter()
        .map(|&i| stopping.averages[i].powf(p) * sigma.mass(&family.members()[i]))
        .sum();
    DominationReport {
        constant: 1.0 / (1.0 - 2f64.powf(-p)),
        max_pointwise_ratio: max_ratio,
        principal_sum,
        maximal_integral,
    }
}
