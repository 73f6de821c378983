use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Deepest level accepted for a dyadic interval. Endpoints stay exactly
/// representable as `f64` well below this bound.
pub const MAX_LEVEL: u32 = 52;

/// The half-open dyadic interval `[position·2^-level, (position+1)·2^-level)`
/// inside the unit interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicInterval {
    level: u32,
    position: u64,
}

/// Set relation between two dyadic intervals `a` and `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Disjoint,
    Equal,
    /// `a ⊊ b`
    FirstInsideSecond,
    /// `b ⊊ a`
    SecondInsideFirst,
}

impl DyadicInterval {
    /// The unit interval `[0, 1)`.
    pub const UNIT: DyadicInterval = DyadicInterval {
        level: 0,
        position: 0,
    };

    pub fn new(level: u32, position: u64) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(Error::param(format!(
                "dyadic level {level} exceeds the supported maximum {MAX_LEVEL}"
            )));
        }
        if position >= 1u64 << level {
            return Err(Error::param(format!(
                "position {position} is outside [0, 2^{level}) at level {level}"
            )));
        }
        Ok(Self { level, position })
    }

    /// `[0, 2^-level)`.
    pub fn origin(level: u32) -> Result<Self> {
        Self::new(level, 0)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn position(&self) -> u64 {
        self.position
    }

    pub fn length(&self) -> f64 {
        pow2(-(self.level as i32))
    }

    pub fn left(&self) -> f64 {
        self.position as f64 * self.length()
    }

    pub fn right(&self) -> f64 {
        (self.position + 1) as f64 * self.length()
    }

    pub fn parent(&self) -> Option<Self> {
        (self.level > 0).then(|| Self {
            level: self.level - 1,
            position: self.position >> 1,
        })
    }

    /// Left and right halves. Panics past [`MAX_LEVEL`].
    pub fn children(&self) -> [Self; 2] {
        assert!(self.level < MAX_LEVEL, "cannot refine past MAX_LEVEL");
        let level = self.level + 1;
        [
            Self {
                level,
                position: 2 * self.position,
            },
            Self {
                level,
                position: 2 * self.position + 1,
            },
        ]
    }

    /// All descendants at `level` (or `self` if `level == self.level`), in
    /// left-to-right order.
    pub fn descendants_at(&self, level: u32) -> Vec<Self> {
        assert!(level >= self.level && level <= MAX_LEVEL);
        let shift = level - self.level;
        let first = self.position << shift;
        (first..first + (1u64 << shift))
            .map(|position| Self { level, position })
            .collect()
    }

    /// Ancestor at a coarser `level`.
    pub fn ancestor_at(&self, level: u32) -> Option<Self> {
        (level <= self.level).then(|| Self {
            level,
            position: self.position >> (self.level - level),
        })
    }

    pub fn contains(&self, other: &Self) -> bool {
        other
            .ancestor_at(self.level)
            .is_some_and(|a| a.position == self.position)
    }

    pub fn relate(&self, other: &Self) -> Relation {
        relate(self, other)
    }
}

/// Relation of `a` to `b`.
pub fn relate(a: &DyadicInterval, b: &DyadicInterval) -> Relation {
    match a.level.cmp(&b.level) {
        Ordering::Equal if a.position == b.position => Relation::Equal,
        Ordering::Equal => Relation::Disjoint,
        Ordering::Less if a.contains(b) => Relation::SecondInsideFirst,
        Ordering::Greater if b.contains(a) => Relation::FirstInsideSecond,
        _ => Relation::Disjoint,
    }
}

/// Orders by left endpoint, coarser intervals first on ties.
impl Ord for DyadicInterval {
    fn cmp(&self, other: &Self) -> Ordering {
        let level = self.level.max(other.level);
        let a = self.position << (level - self.level);
        let b = other.position << (level - other.level);
        a.cmp(&b).then(self.level.cmp(&other.level))
    }
}

impl PartialOrd for DyadicInterval {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.left(), self.right())
    }
}

pub(crate) fn pow2(exp: i32) -> f64 {
    2f64.powi(exp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(level: u32, position: u64) -> DyadicInterval {
        DyadicInterval::new(level, position).unwrap()
    }

    #[test]
    fn relate_examples() {
        assert_eq!(relate(&iv(0, 0), &iv(1, 0)), Relation::SecondInsideFirst);
        assert_eq!(relate(&iv(1, 0), &iv(1, 1)), Relation::Disjoint);
        assert_eq!(relate(&iv(2, 0), &iv(2, 0)), Relation::Equal);
        assert_eq!(relate(&iv(3, 5), &iv(1, 1)), Relation::FirstInsideSecond);
        assert_eq!(relate(&iv(3, 5), &iv(1, 0)), Relation::Disjoint);
    }

    #[test]
    fn nested_or_disjoint_exhaustive() {
        let all: Vec<_> = (0..=4)
            .flat_map(|l| DyadicInterval::UNIT.descendants_at(l))
            .collect();
        for a in &all {
            for b in &all {
                let overlap = a.right().min(b.right()) - a.left().max(b.left());
                let rel = relate(a, b);
                match rel {
                    Relation::Disjoint => assert!(overlap <= 0.0),
                    Relation::Equal => assert_eq!(a, b),
                    Relation::FirstInsideSecond => {
                        assert!(b.left() <= a.left() && a.right() <= b.right() && a != b)
                    }
                    Relation::SecondInsideFirst => {
                        assert!(a.left() <= b.left() && b.right() <= a.right() && a != b)
                    }
                }
                let swapped = match rel {
                    Relation::FirstInsideSecond => Relation::SecondInsideFirst,
                    Relation::SecondInsideFirst => Relation::FirstInsideSecond,
                    r => r,
                };
                assert_eq!(relate(b, a), swapped);
            }
        }
    }

    #[test]
    fn rejects_out_of_range_position() {
        assert!(DyadicInterval::new(2, 4).is_err());
        assert!(DyadicInterval::new(MAX_LEVEL + 1, 0).is_err());
    }

    #[test]
    fn ordering_is_by_left_endpoint() {
        let mut v = vec![iv(1, 1), iv(2, 0), iv(0, 0), iv(1, 0)];
        v.sort();
        assert_eq!(v, vec![iv(0, 0), iv(1, 0), iv(2, 0), iv(1, 1)]);
    }
}
