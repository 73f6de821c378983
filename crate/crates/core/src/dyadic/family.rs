use std::collections::HashSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::interval::DyadicInterval;
use crate::error::{Error, Result};

/// Slack allowed when checking the packing certificate against `1/η`.
const PACKING_TOL: f64 = 1e-12;

/// A finite sparse family of dyadic subintervals of `[0, 1)`.
///
/// Sparsity is certified by Carleson packing: for every member `R`,
/// `Σ_{Q ⊆ R} |Q| ≤ |R| / η`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseFamily {
    members: Vec<DyadicInterval>,
    eta: f64,
}

impl SparseFamily {
    /// Builds a family with a declared sparsity constant, rejecting it if the
    /// packing certificate fails. Members are sorted and deduplicated.
    pub fn new(members: impl IntoIterator<Item = DyadicInterval>, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::param(format!(
                "sparsity constant {eta} not in (0, 1]"
            )));
        }
        let members = normalize(members)?;
        let c = packing_constant(&members);
        if c > (1.0 + PACKING_TOL) / eta {
            return Err(Error::param(format!(
                "family fails the packing certificate: constant {c} exceeds 1/eta = {}",
                1.0 / eta
            )));
        }
        Ok(Self { members, eta })
    }

    /// Builds a family whose sparsity constant is the best one the packing
    /// certificate provides, `η = 1 / carleson_constant`.
    pub fn certified(members: impl IntoIterator<Item = DyadicInterval>) -> Result<Self> {
        let members = normalize(members)?;
        let eta = 1.0 / packing_constant(&members);
        Ok(Self { members, eta })
    }

    pub fn members(&self) -> &[DyadicInterval] {
        &self.members
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// The interval every member lies in.
    pub fn root(&self) -> DyadicInterval {
        DyadicInterval::UNIT
    }

    pub fn max_level(&self) -> u32 {
        self.members.iter().map(|m| m.level()).max().unwrap_or(0)
    }

    /// Indices of the members contained in (or equal to) `r`.
    pub fn members_inside(&self, r: &DyadicInterval) -> impl Iterator<Item = usize> + '_ {
        let r = *r;
        self.members
            .iter()
            .enumerate()
            .filter(move |(_, q)| r.contains(q))
            .map(|(i, _)| i)
    }

    /// Indices of members not contained in any other member.
    pub fn maximal(&self) -> Vec<usize> {
        (0..self.members.len())
            .filter(|&i| {
                let q = &self.members[i];
                !self.members.iter().any(|m| m != q && m.contains(q))
            })
            .collect()
    }

    /// Union with another family; the sparsity constant is re-certified.
    pub fn union(&self, other: &SparseFamily) -> Result<Self> {
        Self::certified(self.members.iter().chain(other.members.iter()).copied())
    }
}

fn normalize(members: impl IntoIterator<Item = DyadicInterval>) -> Result<Vec<DyadicInterval>> {
    let mut members: Vec<_> = members.into_iter().collect();
    if members.is_empty() {
        return Err(Error::param("a sparse family needs at least one member"));
    }
    members.sort();
    members.dedup();
    Ok(members)
}

fn packing_constant(members: &[DyadicInterval]) -> f64 {
    members
        .iter()
        .map(|r| {
            let packed: f64 = members
                .iter()
                .filter(|q| r.contains(q))
                .map(DyadicInterval::length)
                .sum();
            packed / r.length()
        })
        .fold(0.0, f64::max)
}

/// `{[0, 2^-k) : 0 ≤ k ≤ depth}` with `η = 1/2`.
pub fn chain_family(depth: u32) -> Result<SparseFamily> {
    let members = (0..=depth)
        .map(DyadicInterval::origin)
        .collect::<Result<Vec<_>>>()?;
    SparseFamily::new(members, 0.5)
}

/// `max_R Σ_{Q ⊆ R} |Q| / |R|` over the members `R` of the family.
pub fn carleson_constant(family: &SparseFamily) -> f64 {
    packing_constant(&family.members)
}

/// An ordered partition of `[0, 1)` into disjoint dyadic atoms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomPartition {
    atoms: Vec<DyadicInterval>,
}

impl AtomPartition {
    /// Validates that `atoms` tile `[0, 1)`; they are sorted first.
    pub fn new(mut atoms: Vec<DyadicInterval>) -> Result<Self> {
        atoms.sort();
        let mut cursor = 0.0;
        for a in &atoms {
            if a.left() != cursor {
                return Err(Error::param(format!(
                    "atoms do not tile [0, 1): gap or overlap at {cursor}"
                )));
            }
            cursor = a.right();
        }
        if cursor != 1.0 {
            return Err(Error::param("atoms do not cover [0, 1)"));
        }
        Ok(Self { atoms })
    }

    /// All dyadic intervals of `[0, 1)` at `depth`.
    pub fn uniform(depth: u32) -> Self {
        Self {
            atoms: DyadicInterval::UNIT.descendants_at(depth),
        }
    }

    /// Coarsest dyadic partition of `[0, 1)` in which every interval of
    /// `members` is a union of atoms, then refined `extra_depth` more levels.
    pub fn for_members(members: &[DyadicInterval], extra_depth: u32) -> Self {
        let split: HashSet<DyadicInterval> = members
            .iter()
            .flat_map(|m| (0..m.level()).filter_map(move |l| m.ancestor_at(l)))
            .collect();
        let mut atoms = Vec::new();
        let mut stack = vec![DyadicInterval::UNIT];
        while let Some(node) = stack.pop() {
            if split.contains(&node) {
                let [l, r] = node.children();
                stack.push(r);
                stack.push(l);
            } else {
                atoms.extend(node.descendants_at(node.level() + extra_depth));
            }
        }
        Self { atoms }
    }

    pub fn atoms(&self) -> &[DyadicInterval] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.atoms.iter().map(DyadicInterval::length).collect()
    }

    /// The contiguous atom range whose union is exactly `interval`, if any.
    pub fn range_of(&self, interval: &DyadicInterval) -> Option<Range<usize>> {
        let (lo, hi) = (interval.left(), interval.right());
        let start = self.atoms.partition_point(|a| a.left() < lo);
        let end = self.atoms.partition_point(|a| a.left() < hi);
        if start >= end || self.atoms[start].left() != lo || self.atoms[end - 1].right() != hi {
            return None;
        }
        Some(start..end)
    }

    /// Indices of atoms meeting `interval` in a set of positive length.
    pub fn overlapping(&self, interval: &DyadicInterval) -> Range<usize> {
        let start = self.atoms.partition_point(|a| a.right() <= interval.left());
        let end = self.atoms.partition_point(|a| a.left() < interval.right());
        start..end.max(start)
    }

    /// Atom ranges of every interval in `members`, or an error naming the
    /// first interval that is not a union of atoms.
    pub fn member_ranges(&self, members: &[DyadicInterval]) -> Result<Vec<Range<usize>>> {
        members
            .iter()
            .map(|m| {
                self.range_of(m).ok_or_else(|| {
                    Error::PartitionMismatch(format!("{m} is not a union of partition atoms"))
                })
            })
            .collect()
    }

    /// True if every atom of `coarser` is a union of atoms of `self`.
    pub fn refines(&self, coarser: &AtomPartition) -> bool {
        coarser.atoms.iter().all(|a| self.range_of(a).is_some())
    }
}

/// Coarsest partition refined by all member boundaries, plus `extra_depth`
/// levels of uniform refinement.
pub fn atoms_of(family: &SparseFamily, extra_depth: u32) -> AtomPartition {
    AtomPartition::for_members(family.members(), extra_depth)
}

/// Sum of `|Q|` over members inside `r`, divided by `|r|`.
pub fn packing_ratio(family: &SparseFamily, r: &DyadicInterval) -> f64 {
    let packed: f64 = family
        .members_inside(r)
        .map(|i| family.members()[i].length())
        .sum();
    packed / r.length()
}
