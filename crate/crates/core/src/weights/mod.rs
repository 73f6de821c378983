//! Weights on `[0, 1)` with exact interval masses, and the characteristic
//! constants built from them.

mod characteristic;
mod exponents;

pub use characteristic::{
    ainfty, classical_ap, dyadic_maximal, one_weight_apq, two_weight_char, CharacteristicReport,
    TestSet,
};
pub use exponents::{conjugate, feasibility, ExponentConfig, Feasibility, SOBOLEV_TOL};

use serde::{Deserialize, Serialize};

use crate::dyadic::{AtomPartition, DyadicInterval};
use crate::error::{Error, Result};

/// A nonnegative density on `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Weight {
    /// `scale · x^exponent`, with `exponent > -1`.
    Power { scale: f64, exponent: f64 },
    /// Constant `values[i]` on the `i`-th atom of `partition`.
    Piecewise {
        partition: AtomPartition,
        values: Vec<f64>,
    },
}

impl Weight {
    pub fn lebesgue() -> Self {
        Weight::Power {
            scale: 1.0,
            exponent: 0.0,
        }
    }

    /// `x^beta`; requires `beta > -1` for local integrability at the origin.
    pub fn power(beta: f64) -> Result<Self> {
        Self::scaled_power(1.0, beta)
    }

    pub fn scaled_power(scale: f64, exponent: f64) -> Result<Self> {
        if !(exponent > -1.0 && exponent.is_finite()) {
            return Err(Error::param(format!(
                "power weight exponent {exponent} must exceed -1"
            )));
        }
        if !(scale >= 0.0 && scale.is_finite()) {
            return Err(Error::param(format!(
                "power weight scale {scale} must be >= 0"
            )));
        }
        Ok(Weight::Power { scale, exponent })
    }

    pub fn piecewise(partition: AtomPartition, values: Vec<f64>) -> Result<Self> {
        if values.len() != partition.len() {
            return Err(Error::param(format!(
                "{} values for {} atoms",
                values.len(),
                partition.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::param(format!(
                "piecewise weight value {v} is not a finite nonnegative number"
            )));
        }
        Ok(Weight::Piecewise { partition, values })
    }

    /// Piecewise constant on the uniform dyadic partition at `depth`.
    pub fn uniform_piecewise(depth: u32, values: Vec<f64>) -> Result<Self> {
        Self::piecewise(AtomPartition::uniform(depth), values)
    }

    /// `w(I) = ∫_I w`.
    pub fn mass(&self, interval: &DyadicInterval) -> f64 {
        match self {
            Weight::Power { scale, exponent } => {
                scale * power_integral(interval.left(), interval.right(), *exponent)
            }
            Weight::Piecewise { partition, values } => partition
                .overlapping(interval)
                .map(|i| values[i] * overlap(&partition.atoms()[i], interval))
                .sum(),
        }
    }

    /// `∫_I x^gamma w(x) dx`; infinite when the product is not integrable.
    pub fn power_moment(&self, gamma: f64, interval: &DyadicInterval) -> f64 {
        match self {
            Weight::Power { scale, exponent } => {
                scale * power_integral(interval.left(), interval.right(), exponent + gamma)
            }
            Weight::Piecewise { partition, values } => partition
                .overlapping(interval)
                .filter(|&i| values[i] != 0.0)
                .map(|i| {
                    let a = &partition.atoms()[i];
                    let lo = a.left().max(interval.left());
                    let hi = a.right().min(interval.right());
                    values[i] * power_integral(lo, hi, gamma)
                })
                .sum(),
        }
    }

    /// `∫_I w·v`, the mass of `interval` under the product density.
    pub fn product_mass(&self, other: &Weight, interval: &DyadicInterval) -> f64 {
        match (self, other) {
            (Weight::Power { scale, exponent }, w) | (w, Weight::Power { scale, exponent }) => {
                scale * w.power_moment(*exponent, interval)
            }
            (
                Weight::Piecewise {
                    partition: pa,
                    values: va,
                },
                Weight::Piecewise {
                    partition: pb,
                    values: vb,
                },
            ) => {
                let mut total = 0.0;
                for i in pa.overlapping(interval) {
                    let a = &pa.atoms()[i];
                    for j in pb.overlapping(a) {
                        let b = &pb.atoms()[j];
                        let piece = if a.level() >= b.level() { a } else { b };
                        total += va[i] * vb[j] * overlap(piece, interval);
                    }
                }
                total
            }
        }
    }

    /// `c · w`.
    pub fn scaled(&self, c: f64) -> Result<Weight> {
        match self {
            Weight::Power { scale, exponent } => Weight::scaled_power(scale * c, *exponent),
            Weight::Piecewise { partition, values } => {
                Weight::piecewise(partition.clone(), values.iter().map(|v| v * c).collect())
            }
        }
    }

    /// Pointwise power `w^t`. Fails when the result is not locally integrable.
    pub fn powf(&self, t: f64) -> Result<Weight> {
        match self {
            Weight::Power { scale, exponent } => {
                if *scale == 0.0 && t < 0.0 {
                    return Err(Error::param("negative power of the zero weight"));
                }
                Weight::scaled_power(scale.powf(t), exponent * t).map_err(|_| {
                    Error::param(format!(
                        "x^({exponent})^{t} = x^{} is not integrable at the origin",
                        exponent * t
                    ))
                })
            }
            Weight::Piecewise { partition, values } => {
                if t < 0.0 && values.iter().any(|v| *v == 0.0) {
                    return Err(Error::param(
                        "negative power of a piecewise weight with a zero value",
                    ));
                }
                Weight::piecewise(
                    partition.clone(),
                    values.iter().map(|v| v.powf(t)).collect(),
                )
            }
        }
    }

    pub fn is_lebesgue(&self) -> bool {
        matches!(self, Weight::Power { scale, exponent } if *scale == 1.0 && *exponent == 0.0)
    }
}

/// Base measure for [`average`].
#[derive(Debug, Clone, Copy)]
pub enum Base<'a> {
    Lebesgue,
    Weighted(&'a Weight),
}

/// `⟨w⟩_I^base = base(I)^{-1} ∫_I w d(base)`.
pub fn average(w: &Weight, interval: &DyadicInterval, base: Base<'_>) -> Result<f64> {
    let (num, den) = match base {
        Base::Lebesgue => (w.mass(interval), interval.length()),
        Base::Weighted(b) => (w.product_mass(b, interval), b.mass(interval)),
    };
    if !(den > 0.0) {
        return Err(Error::degenerate(format!(
            "base measure of {interval} is zero"
        )));
    }
    Ok(num / den)
}

/// `∫_a^b x^e dx` for `0 <= a <= b`.
pub fn power_integral(a: f64, b: f64, e: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if e == 0.0 {
        return b - a;
    }
    if e <= -1.0 && a == 0.0 {
        return f64::INFINITY;
    }
    if e == -1.0 {
        return (b / a).ln();
    }
    let k = e + 1.0;
    if a == 0.0 {
        b.powf(k) / k
    } else {
        // b^k - a^k = b^k (1 - (a/b)^k), evaluated without cancellation
        -b.powf(k) * ((a / b).ln() * k).exp_m1() / k
    }
}

fn overlap(a: &DyadicInterval, b: &DyadicInterval) -> f64 {
    (a.right().min(b.right()) - a.left().max(b.left())).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(level: u32, position: u64) -> DyadicInterval {
        DyadicInterval::new(level, position).unwrap()
    }

    /// Composite Gauss-Legendre quadrature after the substitution
    /// `x = a + (b-a) t^20`, which removes the endpoint singularity at 0.
    fn quadrature(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let nodes = [
            (-0.906_179_845_938_664, 0.236_926_885_056_189),
            (-0.538_469_310_105_683, 0.478_628_670_499_366),
            (0.0, 0.568_888_888_888_889),
            (0.538_469_310_105_683, 0.478_628_670_499_366),
            (0.906_179_845_938_664, 0.236_926_885_056_189),
        ];
        let m = 20.0;
        let panels = 400;
        let mut total = 0.0;
        for k in 0..panels {
            let (t0, t1) = (k as f64 / panels as f64, (k + 1) as f64 / panels as f64);
            for (x, w) in nodes {
                let t = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * x;
                let jac = (b - a) * m * t.powf(m - 1.0);
                total += 0.5 * (t1 - t0) * w * f(a + (b - a) * t.powf(m)) * jac;
            }
        }
        total
    }

    #[test]
    fn mass_examples() {
        assert_eq!(Weight::lebesgue().mass(&iv(0, 0)), 1.0);
        let w = Weight::power(-0.5).unwrap();
        assert!((w.mass(&iv(2, 0)) - 1.0).abs() < 1e-15);
        let q = quadrature(|x| x.powf(-0.5), 0.0, 0.25);
        assert!((q - 1.0).abs() < 1e-9, "quadrature {q}");
        let pw = Weight::uniform_piecewise(1, vec![1.0, 3.0]).unwrap();
        assert_eq!(pw.mass(&iv(0, 0)), 2.0);
        assert_eq!(pw.mass(&iv(2, 3)), 0.75);
    }

    #[test]
    fn power_mass_matches_quadrature() {
        for beta in [-0.9, -0.3, 0.0, 0.7, 2.5] {
            let w = Weight::power(beta).unwrap();
            for i in [iv(0, 0), iv(3, 0), iv(3, 5), iv(6, 17)] {
                let q = quadrature(|x| x.powf(beta), i.left(), i.right());
                let m = w.mass(&i);
                assert!((m - q).abs() <= 1e-8 * q, "beta {beta} {i}: {m} vs {q}");
            }
        }
    }

    #[test]
    fn average_examples() {
        let leb = Weight::lebesgue();
        assert_eq!(average(&leb, &iv(1, 0), Base::Lebesgue).unwrap(), 1.0);
        let w = Weight::power(-0.5).unwrap();
        assert!((average(&w, &iv(2, 0), Base::Lebesgue).unwrap() - 4.0).abs() < 1e-14);
        let pw = Weight::uniform_piecewise(1, vec![1.0, 3.0]).unwrap();
        assert_eq!(average(&pw, &iv(0, 0), Base::Lebesgue).unwrap(), 2.0);
        let zero = Weight::uniform_piecewise(1, vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            average(&pw, &iv(1, 0), Base::Weighted(&zero)),
            Err(Error::Degenerate(_))
        ));
        // ⟨x^{1/2}⟩ against x^{-1/2} on [0,1): ∫ 1 / ∫ x^{-1/2} = 1/2
        let a = average(
            &Weight::power(0.5).unwrap(),
            &iv(0, 0),
            Base::Weighted(&Weight::power(-0.5).unwrap()),
        )
        .unwrap();
        assert!((a - 0.5).abs() < 1e-15);
    }

    #[test]
    fn product_mass_of_two_piecewise_weights() {
        let a = Weight::uniform_piecewise(1, vec![1.0, 2.0]).unwrap();
        let b = Weight::uniform_piecewise(2, vec![1.0, 3.0, 5.0, 7.0]).unwrap();
        // 0.25 * (1*1 + 1*3 + 2*5 + 2*7)
        assert_eq!(a.product_mass(&b, &iv(0, 0)), 7.0);
        assert_eq!(b.product_mass(&a, &iv(1, 1)), 6.0);
    }

    #[test]
    fn powf_integrability() {
        assert!(Weight::power(0.5).unwrap().powf(-2.0).is_err());
        assert!(Weight::power(0.5).unwrap().powf(-1.5).is_ok());
        let pw = Weight::uniform_piecewise(1, vec![0.0, 3.0]).unwrap();
        assert!(pw.powf(-1.0).is_err());
        assert!(pw.powf(2.0).is_ok());
    }

    #[test]
    fn power_integral_small_intervals() {
        let a = 1.0 - 1.0 / 1024.0;
        let v = power_integral(a, 1.0, 0.3);
        let q = quadrature(|x| x.powf(0.3), a, 1.0);
        assert!((v - q).abs() < 1e-14);
        assert_eq!(power_integral(0.0, 0.5, -1.0), f64::INFINITY);
        assert!((power_integral(0.25, 0.5, -1.0) - 2f64.ln()).abs() < 1e-15);
    }
}
