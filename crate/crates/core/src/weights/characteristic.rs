use serde::{Deserialize, Serialize};

use super::{average, Base, ExponentConfig, Weight};
use crate::dyadic::{AtomPartition, DyadicInterval, SparseFamily};
use crate::error::{Error, Result};
use crate::operator::StepFunction;

/// Finite set of intervals over which a characteristic supremum is taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TestSet {
    /// The members of a sparse family.
    Family(Vec<DyadicInterval>),
    /// `[0, 2^-k)` for `0 ≤ k ≤ depth`.
    OriginAnchored { depth: u32 },
    /// Every dyadic subinterval of `[0, 1)` with level `≤ depth`.
    DyadicGrid { depth: u32 },
}

impl TestSet {
    pub fn family(family: &SparseFamily) -> Self {
        TestSet::Family(family.members().to_vec())
    }

    pub fn intervals(&self) -> Vec<DyadicInterval> {
        match self {
            TestSet::Family(m) => m.clone(),
            TestSet::OriginAnchored { depth } => (0..=*depth)
                .map(|k| DyadicInterval::origin(k).expect("depth within MAX_LEVEL"))
                .collect(),
            TestSet::DyadicGrid { depth } => (0..=*depth)
                .flat_map(|l| DyadicInterval::UNIT.descendants_at(l))
                .collect(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            TestSet::Family(m) => format!("family ({} members)", m.len()),
            TestSet::OriginAnchored { depth } => format!("origin-anchored [0,2^-k), k <= {depth}"),
            TestSet::DyadicGrid { depth } => format!("dyadic grid to depth {depth}"),
        }
    }
}

/// A characteristic constant together with where it is attained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicReport {
    pub value: f64,
    pub attained_at: DyadicInterval,
    pub test_set: String,
    /// Set when the value only bounds the continuous characteristic from
    /// below (dyadic, depth-truncated maximal function).
    pub lower_estimate: bool,
}

fn sup_over<F>(
    intervals: &[DyadicInterval],
    test_set: String,
    mut per_interval: F,
) -> Result<CharacteristicReport>
where
    F: FnMut(&DyadicInterval) -> Result<Option<f64>>,
{
    let mut best: Option<(f64, DyadicInterval)> = None;
    for q in intervals {
        if let Some(v) = per_interval(q)? {
            if best.is_none_or(|(b, _)| v > b) {
                best = Some((v, *q));
            }
        }
    }
    let (value, attained_at) =
        best.ok_or_else(|| Error::degenerate("characteristic test set is empty"))?;
    Ok(CharacteristicReport {
        value,
        attained_at,
        test_set,
        lower_estimate: false,
    })
}

/// `max_{Q∈S} |Q|^{-α} ω(Q)^{1/q} σ(Q)^{1/p'}`.
pub fn two_weight_char(
    omega: &Weight,
    sigma: &Weight,
    cfg: &ExponentConfig,
    family: &SparseFamily,
) -> CharacteristicReport {
    let (iq, ipc) = (1.0 / cfg.q, 1.0 / cfg.p_conj());
    sup_over(family.members(), TestSet::family(family).describe(), |q| {
        Ok(Some(
            q.length().powf(-cfg.alpha) * omega.mass(q).powf(iq) * sigma.mass(q).powf(ipc),
        ))
    })
    .expect("families are non-empty")
}

/// `max_Q ⟨ω^q⟩_Q ⟨ω^{-p'}⟩_Q^{q/p'}` over `test_set`.
pub fn one_weight_apq(
    omega: &Weight,
    p: f64,
    q: f64,
    test_set: &TestSet,
) -> Result<CharacteristicReport> {
    let pc = super::conjugate(p);
    let up = omega.powf(q)?;
    let down = omega.powf(-pc)?;
    sup_over(&test_set.intervals(), test_set.describe(), |i| {
        let a = average(&up, i, Base::Lebesgue)?;
        let b = average(&down, i, Base::Lebesgue)?;
        Ok(Some(a * b.powf(q / pc)))
    })
}

/// `max_Q |Q|^{-p} ω(Q) σ(Q)^{p-1}` over `test_set`.
pub fn classical_ap(
    omega: &Weight,
    sigma: &Weight,
    p: f64,
    test_set: &TestSet,
) -> CharacteristicReport {
    sup_over(&test_set.intervals(), test_set.describe(), |i| {
        Ok(Some(
            i.length().powf(-p) * omega.mass(i) * sigma.mass(i).powf(p - 1.0),
        ))
    })
    .expect("test sets are non-empty")
}

/// Averages `⟨w⟩_J` of every dyadic `J ⊆ root` down to `depth`, one vector
/// per level below `root`.
fn average_tree(w: &Weight, root: &DyadicInterval, depth: u32) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut masses = Vec::new();
    let mut avgs = Vec::new();
    for level in root.level()..=depth {
        let nodes = root.descendants_at(level);
        let m: Vec<f64> = nodes.iter().map(|n| w.mass(n)).collect();
        let len = nodes[0].length();
        avgs.push(m.iter().map(|x| x / len).collect());
        masses.push(m);
    }
    (masses, avgs)
}

/// `∫_J max_{a ⊆ J' ⊆ J} ⟨w⟩_{J'}` over the depth-`depth` atoms `a` of the
/// node `(j, i)` of an average tree, seeded with the running maximum `m`.
fn integrate_max(avgs: &[Vec<f64>], j: usize, i: usize, m: f64, leaf_len: f64) -> f64 {
    let m = m.max(avgs[j][i]);
    if j + 1 == avgs.len() {
        m * leaf_len
    } else {
        integrate_max(avgs, j + 1, 2 * i, m, leaf_len)
            + integrate_max(avgs, j + 1, 2 * i + 1, m, leaf_len)
    }
}

/// Dyadic maximal function of `1_Q w` truncated at `depth`: on each
/// depth-`depth` atom `a ⊆ Q` it is `max_{a ⊆ Q' ⊆ Q} ⟨w⟩_{Q'}`; it vanishes
/// off `Q`.
pub fn dyadic_maximal(w: &Weight, q: &DyadicInterval, depth: u32) -> Result<StepFunction> {
    if depth < q.level() {
        return Err(Error::precondition(format!(
            "depth {depth} is coarser than the level {} of {q}",
            q.level()
        )));
    }
    let (_, avgs) = average_tree(w, q, depth);
    let leaves = q.descendants_at(depth);
    let mut inside = vec![f64::NEG_INFINITY; leaves.len()];
    for (j, level) in avgs.iter().enumerate() {
        let span = 1usize << (avgs.len() - 1 - j);
        for (i, a) in level.iter().enumerate() {
            for v in &mut inside[i * span..(i + 1) * span] {
                *v = v.max(*a);
            }
        }
    }
    let outside: Vec<DyadicInterval> = (0..q.level())
        .map(|l| {
            let anc = q.ancestor_at(l + 1).expect("l + 1 <= level");
            DyadicInterval::new(l + 1, anc.position() ^ 1).expect("sibling exists")
        })
        .collect();
    let mut atoms: Vec<(DyadicInterval, f64)> = outside.into_iter().map(|a| (a, 0.0)).collect();
    atoms.extend(leaves.into_iter().zip(inside));
    atoms.sort_by(|a, b| a.0.cmp(&b.0));
    let (atoms, values): (Vec<_>, Vec<_>) = atoms.into_iter().unzip();
    StepFunction::new(AtomPartition::new(atoms)?, values)
}

/// Fujii–Wilson characteristic `max_Q ω(Q)^{-1} ∫_Q M(1_Q ω)` over dyadic
/// `Q ⊆ root` with level `≤ depth`, using the dyadic maximal function
/// truncated at `depth`. Always a lower estimate of the continuous constant.
pub fn ainfty(w: &Weight, root: &DyadicInterval, depth: u32) -> Result<CharacteristicReport> {
    if depth < root.level() {
        return Err(Error::precondition(format!(
            "depth {depth} is coarser than the level {} of {root}",
            root.level()
        )));
    }
    if !(w.mass(root) > 0.0) {
        return Err(Error::degenerate(format!("weight has zero mass on {root}")));
    }
    let (masses, avgs) = average_tree(w, root, depth);
    let leaf_len = 2f64.powi(-(depth as i32));
    let mut best: Option<(f64, DyadicInterval)> = None;
    for (j, level) in masses.iter().enumerate() {
        let nodes = root.descendants_at(root.level() + j as u32);
        for (i, mass) in level.iter().enumerate() {
            if !(*mass > 0.0) {
                continue;
            }
            let v = integrate_max(&avgs[j..], 0, i, f64::NEG_INFINITY, leaf_len) / mass;
            if best.is_none_or(|(b, _)| v > b) {
                best = Some((v, nodes[i]));
            }
        }
    }
    let (value, attained_at) = best.expect("root has positive mass");
    Ok(CharacteristicReport {
        value,
        attained_at,
        test_set: format!("dyadic grid inside {root} to depth {depth}"),
        lower_estimate: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::chain_family;
    use proptest::prelude::*;

    fn iv(level: u32, position: u64) -> DyadicInterval {
        DyadicInterval::new(level, position).unwrap()
    }

    fn cfg(p: f64, q: f64, r: f64, alpha: f64) -> ExponentConfig {
        ExponentConfig::new(p, q, r, alpha).unwrap()
    }

    /// Direct evaluation from the definition: for every dyadic `Q` and every
    /// depth-`depth` point cell, scan all dyadic `J` with `cell ⊆ J ⊆ Q`.
    fn ainfty_brute(w: &Weight, depth: u32) -> f64 {
        let mut best: f64 = 0.0;
        for lq in 0..=depth {
            for q in DyadicInterval::UNIT.descendants_at(lq) {
                let mut integral = 0.0;
                for cell in q.descendants_at(depth) {
                    let mut m: f64 = 0.0;
                    for lj in lq..=depth {
                        for j in DyadicInterval::UNIT.descendants_at(lj) {
                            if q.contains(&j) && j.contains(&cell) {
                                m = m.max(w.mass(&j) / j.length());
                            }
                        }
                    }
                    integral += m * cell.length();
                }
                best = best.max(integral / w.mass(&q));
            }
        }
        best
    }

    #[test]
    fn two_weight_char_examples() {
        let leb = Weight::lebesgue();
        for k in 0..6 {
            let s = chain_family(k).unwrap();
            let v = two_weight_char(&leb, &leb, &cfg(2.0, 2.0, 1.0, 1.0), &s).value;
            assert!((v - 1.0).abs() < 1e-12);
            let v = two_weight_char(&leb, &leb, &cfg(2.0, 4.0, 1.0, 0.75), &s).value;
            assert!((v - 1.0).abs() < 1e-12);
            let w = Weight::power(-0.5).unwrap();
            let r = two_weight_char(&w, &w, &cfg(2.0, 2.0, 1.0, 1.0), &s);
            let expected = 2.0 * 2f64.powf(k as f64 / 2.0);
            assert!((r.value - expected).abs() < 1e-12 * expected);
            assert_eq!(r.attained_at, iv(k, 0));
        }
    }

    #[test]
    fn one_weight_examples() {
        let t = TestSet::DyadicGrid { depth: 5 };
        let r = one_weight_apq(&Weight::lebesgue(), 2.0, 4.0, &t).unwrap();
        assert!((r.value - 1.0).abs() < 1e-14);
        // ω_ε = x^{(1-ε)/p'} with ε = 1/2, p = 2, q = 4
        let w = Weight::power(0.25).unwrap();
        let r = one_weight_apq(&w, 2.0, 4.0, &TestSet::OriginAnchored { depth: 12 }).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
        assert!(one_weight_apq(&Weight::power(0.6).unwrap(), 2.0, 4.0, &t).is_err());
    }

    #[test]
    fn one_weight_two_weight_identity() {
        for (beta, p, q) in [(0.25, 2.0, 4.0), (-0.1, 3.0, 3.5), (0.3, 1.5, 6.0)] {
            let w = Weight::power(beta).unwrap();
            let s = chain_family(7).unwrap();
            let alpha = 1.0 / q + 1.0 / super::super::conjugate(p);
            let two = two_weight_char(
                &w.powf(q).unwrap(),
                &w.powf(-super::super::conjugate(p)).unwrap(),
                &cfg(p, q, 1.0, alpha),
                &s,
            );
            let one = one_weight_apq(&w, p, q, &TestSet::family(&s)).unwrap();
            let rel = (two.value - one.value.powf(1.0 / q)).abs() / two.value;
            assert!(rel < 1e-12, "relative gap {rel}");
        }
    }

    #[test]
    fn classical_ap_examples() {
        let leb = Weight::lebesgue();
        let t = TestSet::DyadicGrid { depth: 4 };
        assert!((classical_ap(&leb, &leb, 2.0, &t).value - 1.0).abs() < 1e-14);
        let w = Weight::power(-0.5).unwrap();
        let s = chain_family(4).unwrap();
        let ap = classical_ap(&w, &w, 2.0, &TestSet::family(&s)).value;
        assert!((ap - 64.0).abs() < 1e-11);
        let tw = two_weight_char(&w, &w, &cfg(2.0, 2.0, 1.0, 1.0), &s).value;
        assert!((tw * tw - ap).abs() < 1e-11);
    }

    #[test]
    fn dyadic_maximal_examples() {
        let leb = Weight::lebesgue();
        let m = dyadic_maximal(&leb, &iv(2, 1), 5).unwrap();
        let inside: Vec<_> = m
            .partition()
            .atoms()
            .iter()
            .zip(m.values())
            .filter(|(a, _)| iv(2, 1).contains(a))
            .map(|(_, v)| *v)
            .collect();
        assert_eq!(inside.len(), 8);
        assert!(inside.iter().all(|v| *v == 1.0));
        let pw = Weight::uniform_piecewise(1, vec![1.0, 3.0]).unwrap();
        let m = dyadic_maximal(&pw, &DyadicInterval::UNIT, 1).unwrap();
        assert_eq!(m.values(), &[2.0, 3.0]);
        assert!(dyadic_maximal(&pw, &iv(3, 0), 2).is_err());
    }

    #[test]
    fn ainfty_examples() {
        for d in 0..8 {
            let r = ainfty(&Weight::lebesgue(), &DyadicInterval::UNIT, d).unwrap();
            assert_eq!(r.value, 1.0);
            assert!(r.lower_estimate);
        }
        let pw = Weight::uniform_piecewise(1, vec![1.0, 3.0]).unwrap();
        let r = ainfty(&pw, &DyadicInterval::UNIT, 1).unwrap();
        assert_eq!(r.value, 1.25);
        assert_eq!(ainfty_brute(&pw, 1), 1.25);
    }

    #[test]
    fn ainfty_matches_brute_force() {
        let w = Weight::uniform_piecewise(3, vec![0.5, 4.0, 1.0, 0.1, 2.0, 2.0, 7.0, 0.3]).unwrap();
        for d in 0..=4 {
            let fast = ainfty(&w, &DyadicInterval::UNIT, d).unwrap().value;
            let slow = ainfty_brute(&w, d);
            assert!(
                (fast - slow).abs() < 1e-12 * slow,
                "depth {d}: {fast} vs {slow}"
            );
        }
        let w = Weight::power(1.0).unwrap();
        for d in 0..=5 {
            let fast = ainfty(&w, &DyadicInterval::UNIT, d).unwrap().value;
            assert!((fast - ainfty_brute(&w, d)).abs() < 1e-12);
        }
    }

    #[test]
    fn ainfty_of_linear_weight_is_bounded_and_monotone() {
        let w = Weight::power(1.0).unwrap();
        let mut prev = 0.0;
        for d in 0..=14 {
            let v = ainfty(&w, &DyadicInterval::UNIT, d).unwrap().value;
            assert!((1.0..=2.0).contains(&v), "depth {d}: {v}");
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn ainfty_errors() {
        let z = Weight::uniform_piecewise(1, vec![0.0, 0.0]).unwrap();
        assert!(matches!(
            ainfty(&z, &DyadicInterval::UNIT, 2),
            Err(Error::Degenerate(_))
        ));
        assert!(ainfty(&Weight::lebesgue(), &iv(3, 0), 2).is_err());
    }

    fn piecewise(depth: u32) -> impl Strategy<Value = Weight> {
        proptest::collection::vec(0.01f64..100.0, 1usize << depth)
            .prop_map(move |v| Weight::uniform_piecewise(depth, v).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn ainfty_is_at_least_one_and_monotone(w in piecewise(3)) {
            let mut prev = 0.0;
            for d in 0..=5 {
                let v = ainfty(&w, &DyadicInterval::UNIT, d).unwrap().value;
                prop_assert!(v >= 1.0 - 1e-12);
                prop_assert!(v >= prev);
                prev = v;
            }
        }

        #[test]
        fn scaling_covariance(w in piecewise(3), s in piecewise(2), c in 0.01f64..100.0) {
            let family = SparseFamily::certified([iv(0, 0), iv(1, 1), iv(3, 2)]).unwrap();
            let cf = cfg(2.0, 3.0, 1.0, 0.8);
            let base = two_weight_char(&w, &s, &cf, &family).value;
            let scaled = two_weight_char(&w.scaled(c).unwrap(), &s, &cf, &family).value;
            prop_assert!((scaled - c.powf(1.0 / 3.0) * base).abs() <= 1e-12 * scaled);
            let a = ainfty(&w, &DyadicInterval::UNIT, 4).unwrap().value;
            let b = ainfty(&w.scaled(c).unwrap(), &DyadicInterval::UNIT, 4).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-12 * a);
        }

        #[test]
        fn remark_identity_on_random_pairs(w in piecewise(3), s in piecewise(3), p in 1.1f64..5.0) {
            let family = SparseFamily::certified([iv(0, 0), iv(1, 0), iv(2, 3), iv(3, 5)]).unwrap();
            let tw = two_weight_char(&w, &s, &cfg(p, p, 1.0, 1.0), &family).value;
            let ap = classical_ap(&w, &s, p, &TestSet::family(&family)).value;
            prop_assert!((tw - ap.powf(1.0 / p)).abs() <= 1e-12 * tw);
        }

        #[test]
        fn two_weight_char_grows_with_family(w in piecewise(3), s in piecewise(3)) {
            let small = SparseFamily::certified([iv(0, 0), iv(2, 1)]).unwrap();
            let large = small.union(&SparseFamily::certified([iv(1, 1), iv(3, 0)]).unwrap()).unwrap();
            let cf = cfg(1.5, 2.5, 2.0, 0.9);
            prop_assert!(two_weight_char(&w, &s, &cf, &large).value >= two_weight_char(&w, &s, &cf, &small).value);
        }
    }
}
