use serde::{Deserialize, Serialize};

use crate::dyadic::{AtomPartition, DyadicInterval};
use crate::error::{Error, Result};
use crate::weights::Weight;

/// A function that is constant on each atom of a dyadic partition of `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    partition: AtomPartition,
    values: Vec<f64>,
    nonnegative: bool,
}

impl StepFunction {
    pub fn new(partition: AtomPartition, values: Vec<f64>) -> Result<Self> {
        if values.len() != partition.len() {
            return Err(Error::param(format!(
                "step function has {} values for {} atoms",
                values.len(),
                partition.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("step function values must be finite"));
        }
        let nonnegative = values.iter().all(|v| *v >= 0.0);
        Ok(Self {
            partition,
            values,
            nonnegative,
        })
    }

    pub fn constant(partition: AtomPartition, c: f64) -> Self {
        let values = vec![c; partition.len()];
        Self::new(partition, values).expect("finite constant")
    }

    /// `1_interval`; `interval` must be a union of atoms.
    pub fn indicator(partition: AtomPartition, interval: &DyadicInterval) -> Result<Self> {
        let range = partition.range_of(interval).ok_or_else(|| {
            Error::PartitionMismatch(format!("{interval} is not a union of atoms"))
        })?;
        let mut values = vec![0.0; partition.len()];
        values[range].fill(1.0);
        Self::new(partition, values)
    }

    pub fn partition(&self) -> &AtomPartition {
        &self.partition
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_nonnegative(&self) -> bool {
        self.nonnegative
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::new(
            self.partition.clone(),
            self.values.iter().map(|v| v * c).collect(),
        )
        .expect("scaling keeps values finite")
    }

    /// Value on the atom containing the point `x ∈ [0, 1)`.
    pub fn value_at(&self, x: f64) -> f64 {
        let i = self
            .partition
            .atoms()
            .partition_point(|a| a.right() <= x)
            .min(self.values.len() - 1);
        self.values[i]
    }

    /// `∫_I f dw`; `I` must be a union of atoms.
    pub fn integral(&self, w: &Weight, interval: &DyadicInterval) -> Result<f64> {
        let range = self.partition.range_of(interval).ok_or_else(|| {
            Error::PartitionMismatch(format!("{interval} is not a union of atoms"))
        })?;
        Ok(range
            .map(|i| self.values[i] * w.mass(&self.partition.atoms()[i]))
            .sum())
    }
}

/// `(Σ_a |f(a)|^p w(a))^{1/p}`, evaluated as `max|f| · (Σ (|f|/max|f|)^p w)^{1/p}`
/// so that large exponents do not overflow.
pub fn lp_norm(f: &StepFunction, w: &Weight, p: f64) -> f64 {
    let masses: Vec<f64> = f.partition.atoms().iter().map(|a| w.mass(a)).collect();
    let top = f
        .values
        .iter()
        .zip(&masses)
        .filter(|(_, m)| **m > 0.0)
        .fold(0.0f64, |t, (v, _)| t.max(v.abs()));
    if top == 0.0 {
        return 0.0;
    }
    let sum: f64 = f
        .values
        .iter()
        .zip(&masses)
        .filter(|(v, m)| **v != 0.0 && **m > 0.0)
        .map(|(v, m)| (v.abs() / top).powf(p) * m)
        .sum();
    top * sum.powf(1.0 / p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lp_norm_examples() {
        let one = StepFunction::constant(AtomPartition::uniform(0), 1.0);
        assert_eq!(lp_norm(&one, &Weight::lebesgue(), 2.0), 1.0);
        let f = StepFunction::new(AtomPartition::uniform(1), vec![1.0, 3.0]).unwrap();
        assert!((lp_norm(&f, &Weight::lebesgue(), 2.0) - 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn value_lookup_and_nonnegativity() {
        let f = StepFunction::new(AtomPartition::uniform(2), vec![1.0, -2.0, 3.0, 4.0]).unwrap();
        assert!(!f.is_nonnegative());
        assert_eq!(f.value_at(0.3), -2.0);
        assert_eq!(f.value_at(0.75), 4.0);
        assert!(StepFunction::new(AtomPartition::uniform(1), vec![1.0]).is_err());
    }

    proptest! {
        #[test]
        fn lp_norm_is_homogeneous(
            values in proptest::collection::vec(-10.0f64..10.0, 8),
            c in -5.0f64..5.0,
            p in 1.0f64..5.0,
        ) {
            let f = StepFunction::new(AtomPartition::uniform(3), values).unwrap();
            let w = Weight::power(-0.4).unwrap();
            let lhs = lp_norm(&f.scaled(c), &w, p);
            let rhs = c.abs() * lp_norm(&f, &w, p);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
        }
    }
}
