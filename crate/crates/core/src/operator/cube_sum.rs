use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{AtomPartition, DyadicInterval};
use crate::error::{Error, Result};
use crate::weights::Weight;

/// Settings for the multi-start ascent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AscentOptions {
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop once an iteration improves `log R` by less than this.
    pub tol: f64,
    pub seed: u64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self {
            restarts: 16,
            max_iters: 5000,
            tol: 1e-8,
            seed: 0,
        }
    }
}

/// Best point found by [`CubeSum::maximize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Maximum {
    pub value: f64,
    /// Per-atom values of the maximizer, normalized to unit `L^p_σ` norm.
    pub values: Vec<f64>,
    pub restart: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// The positive operator `f ↦ (Σ_Q κ_Q (∫_Q f dσ)^r 1_Q)^{1/r}` from `L^p_σ`
/// to `L^q_ω`, discretized on an atom partition refining every cube.
///
/// The sparse operator is the case `κ_Q = |Q|^{-αr}`; linear positive dyadic
/// operators are `r = 1`, `κ_Q = τ_Q / |Q|`.
#[derive(Debug, Clone)]
pub struct CubeSum {
    partition: AtomPartition,
    ranges: Vec<Range<usize>>,
    kappa: Vec<f64>,
    sigma: Vec<f64>,
    omega: Vec<f64>,
    /// Atoms where `f` matters: covered by a cube with `κ_Q > 0` and `σ > 0`.
    active: Vec<bool>,
    r: f64,
    p: f64,
    q: f64,
}

struct Eval {
    log_ratio: f64,
    /// `Σ_{Q∋b} κ_Q m_Q^{r-1} H_Q`, the gradient numerator.
    s: Vec<f64>,
    n: f64,
    d: f64,
}

impl CubeSum {
    pub fn new(
        cubes: &[DyadicInterval],
        kappa: Vec<f64>,
        exponents: (f64, f64, f64),
        omega: &Weight,
        sigma: &Weight,
    ) -> Result<Self> {
        let partition = AtomPartition::for_members(cubes, 0);
        Self::on_partition(partition, cubes, kappa, exponents, omega, sigma)
    }

    /// `exponents = (r, p, q)`.
    pub fn on_partition(
        partition: AtomPartition,
        cubes: &[DyadicInterval],
        kappa: Vec<f64>,
        (r, p, q): (f64, f64, f64),
        omega: &Weight,
        sigma: &Weight,
    ) -> Result<Self> {
        if kappa.len() != cubes.len() {
            return Err(Error::param("one coefficient per cube required"));
        }
        if kappa.iter().any(|k| !(*k >= 0.0 && k.is_finite())) {
            return Err(Error::param(
                "cube coefficients must be finite and nonnegative",
            ));
        }
        if !(r > 0.0 && p > 1.0 && q > 0.0) {
            return Err(Error::param(format!(
                "invalid exponents r={r}, p={p}, q={q}"
            )));
        }
        let ranges = partition.member_ranges(cubes)?;
        let sigma: Vec<f64> = partition.atoms().iter().map(|a| sigma.mass(a)).collect();
        let omega: Vec<f64> = partition.atoms().iter().map(|a| omega.mass(a)).collect();
        let mut active = vec![false; partition.len()];
        for (range, k) in ranges.iter().zip(&kappa) {
            if *k > 0.0 {
                for a in range.clone() {
                    active[a] |= sigma[a] > 0.0;
                }
            }
        }
        Ok(Self {
            partition,
            ranges,
            kappa,
            sigma,
            omega,
            active,
            r,
            p,
            q,
        })
    }

    pub fn partition(&self) -> &AtomPartition {
        &self.partition
    }

    pub fn active_atoms(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    /// `G_a = Σ_{Q∋a} κ_Q m_Q^r`, together with the cube masses `m_Q`.
    fn cube_sums(&self, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut g = vec![0.0; f.len()];
        let m: Vec<f64> = self
            .ranges
            .iter()
            .map(|range| range.clone().map(|a| f[a] * self.sigma[a]).sum::<f64>())
            .collect();
        for ((range, k), mq) in self.ranges.iter().zip(&self.kappa).zip(&m) {
            if *k > 0.0 && *mq > 0.0 {
                let term = k * mq.powf(self.r);
                for a in range.clone() {
                    g[a] += term;
                }
            }
        }
        (g, m)
    }

    /// Per-atom values of `T f` for a nonnegative `f` on the partition.
    pub fn apply_values(&self, f: &[f64]) -> Vec<f64> {
        let (g, _) = self.cube_sums(f);
        g.into_iter().map(|x| x.powf(1.0 / self.r)).collect()
    }

    /// `‖T f‖_{L^q_ω} / ‖f‖_{L^p_σ}`; zero when `f` vanishes.
    pub fn rayleigh(&self, f: &[f64]) -> f64 {
        self.evaluate(f, false).log_ratio.exp()
    }

    fn evaluate(&self, f: &[f64], with_gradient: bool) -> Eval {
        let (g, m) = self.cube_sums(f);
        let e = self.q / self.r;
        let n: f64 = g
            .iter()
            .zip(&self.omega)
            .filter(|(ga, _)| **ga > 0.0)
            .map(|(ga, w)| w * ga.powf(e))
            .sum();
        let d: f64 = f
            .iter()
            .zip(&self.sigma)
            .map(|(fa, s)| s * fa.powf(self.p))
            .sum();
        let log_ratio = if n > 0.0 && d > 0.0 {
            n.ln() / self.q - d.ln() / self.p
        } else {
            f64::NEG_INFINITY
        };
        let mut s = Vec::new();
        if with_gradient {
            s = vec![0.0; f.len()];
            for ((range, k), mq) in self.ranges.iter().zip(&self.kappa).zip(&m) {
                if !(*k > 0.0 && *mq > 0.0) {
                    continue;
                }
                let h: f64 = range
                    .clone()
                    .filter(|a| g[*a] > 0.0)
                    .map(|a| self.omega[a] * g[a].powf(e - 1.0))
                    .sum();
                let coeff = k * mq.powf(self.r - 1.0) * h;
                for a in range.clone() {
                    s[a] += coeff;
                }
            }
        }
        Eval { log_ratio, s, n, d }
    }

    fn normalize(&self, f: &mut [f64]) {
        let d: f64 = f
            .iter()
            .zip(&self.sigma)
            .map(|(fa, s)| s * fa.powf(self.p))
            .sum();
        if d > 0.0 {
            let c = d.powf(-1.0 / self.p);
            f.iter_mut().for_each(|x| *x *= c);
        }
    }

    /// Monotone ascent of `log R` from `start`: fixed-point proposals
    /// `f_b ← S_b^{1/(p-1)}` (the stationarity condition), falling back to a
    /// backtracking gradient step in `u = log f` when a proposal does not
    /// improve. Returns `(value, f, iterations, converged)`.
    fn ascend(&self, start: Vec<f64>, opts: &AscentOptions) -> (f64, Vec<f64>, usize, bool) {
        let mut f: Vec<f64> = start
            .into_iter()
            .zip(&self.active)
            .map(|(x, act)| if *act { x } else { 0.0 })
            .collect();
        self.normalize(&mut f);
        let mut cur = self.evaluate(&f, true);
        let mut step = 1.0;
        for iter in 1..=opts.max_iters {
            // S^{1/(p-1)} relative to its largest entry, to stay finite
            let top = cur.s.iter().fold(0.0f64, |m, s| m.max(*s));
            let mut proposal: Vec<f64> = cur
                .s
                .iter()
                .zip(&self.active)
                .map(|(s, act)| {
                    if *act && top > 0.0 {
                        ((s / top).ln() / (self.p - 1.0)).exp()
                    } else {
                        0.0
                    }
                })
                .collect();
            self.normalize(&mut proposal);
            let mut next = self.evaluate(&proposal, true);
            if !(next.log_ratio > cur.log_ratio) {
                // gradient of log R in u = log f
                let grad: Vec<f64> = (0..f.len())
                    .map(|b| {
                        if self.active[b] {
                            f[b] * self.sigma[b]
                                * (cur.s[b] / cur.n - f[b].powf(self.p - 1.0) / cur.d)
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let scale = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
                if !(scale > 0.0) {
                    return (cur.log_ratio.exp(), f, iter, true);
                }
                let mut accepted = false;
                let mut t = step;
                while t > 1e-14 {
                    proposal = f
                        .iter()
                        .zip(&grad)
                        .map(|(x, g)| {
                            if *x > 0.0 {
                                x * (t * g / scale).exp()
                            } else {
                                0.0
                            }
                        })
                        .collect();
                    self.normalize(&mut proposal);
                    next = self.evaluate(&proposal, true);
                    if next.log_ratio > cur.log_ratio {
                        accepted = true;
                        step = (2.0 * t).min(1e3);
                        break;
                    }
                    t *= 0.5;
                }
                if !accepted {
                    return (cur.log_ratio.exp(), f, iter, true);
                }
            }
            let gain = next.log_ratio - cur.log_ratio;
            f = proposal;
            cur = next;
            if gain < opts.tol {
                return (cur.log_ratio.exp(), f, iter, true);
            }
        }
        (cur.log_ratio.exp(), f, opts.max_iters, false)
    }

    /// Multi-start maximization of the Rayleigh quotient. Restart 0 starts
    /// from the constant function; the others from values drawn log-uniformly
    /// in `[1e-3, 1e3]` per atom. Ties go to the lowest restart index.
    pub fn maximize(&self, opts: &AscentOptions) -> Maximum {
        let n = self.partition.len();
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let starts: Vec<Vec<f64>> = (0..opts.restarts.max(1))
            .map(|i| {
                if i == 0 {
                    vec![1.0; n]
                } else {
                    (0..n)
                        .map(|_| 10f64.powf(rng.gen_range(-3.0..=3.0)))
                        .collect()
                }
            })
            .collect();
        let runs: Vec<(f64, Vec<f64>, usize, bool)> = starts
            .into_par_iter()
            .map(|start| self.ascend(start, opts))
            .collect();
        let iterations = runs.iter().map(|r| r.2).sum();
        let (restart, best) = runs
            .into_iter()
            .enumerate()
            .fold(
                None::<(usize, (f64, Vec<f64>, usize, bool))>,
                |acc, (i, run)| match acc {
                    Some((j, b)) if !(run.0 > b.0) => Some((j, b)),
                    _ => Some((i, run)),
                },
            )
            .expect("at least one restart");
        let value = if best.0.is_finite() { best.0 } else { 0.0 };
        Maximum {
            value,
            values: best.1,
            restart,
            iterations,
            converged: best.3,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::chain_family;

    fn sparse(depth: u32, r: f64, p: f64, q: f64, alpha: f64) -> CubeSum {
        let s = chain_family(depth).unwrap();
        let kappa = s
            .members()
            .iter()
            .map(|m| m.length().powf(-alpha * r))
            .collect();
        let leb = Weight::lebesgue();
        CubeSum::new(s.members(), kappa, (r, p, q), &leb, &leb).unwrap()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for (r, p, q) in [(1.0, 2.0, 2.0), (2.0, 3.0, 5.0), (0.5, 1.5, 2.5)] {
            let op = sparse(3, r, p, q, 0.8);
            let f = vec![0.7, 1.3, 0.4, 2.1];
            let e = op.evaluate(&f, true);
            for b in 0..f.len() {
                let h: f64 = 1e-6;
                let mut up = f.clone();
                up[b] *= h.exp();
                let mut down = f.clone();
                down[b] *= (-h).exp();
                let fd = (op.evaluate(&up, false).log_ratio - op.evaluate(&down, false).log_ratio)
                    / (2.0 * h);
                let analytic = f[b] * op.sigma[b] * (e.s[b] / e.n - f[b].powf(p - 1.0) / e.d);
                assert!(
                    (fd - analytic).abs() < 1e-7,
                    "r={r} b={b}: {fd} vs {analytic}"
                );
            }
        }
    }

    #[test]
    fn two_atom_linear_norm_is_largest_singular_value() {
        // matrix [[3/2, 1/2], [1/2, 1/2]] with equal half masses on both sides
        let op = sparse(1, 1.0, 2.0, 2.0, 1.0);
        let m = op.maximize(&AscentOptions::default());
        assert!(
            (m.value - (1.0 + 0.5f64.sqrt())).abs() < 1e-7,
            "{}",
            m.value
        );
        assert!(m.converged);
    }

    #[test]
    fn maximize_is_deterministic() {
        let op = sparse(4, 2.0, 2.0, 4.0, 0.75);
        let opts = AscentOptions {
            seed: 11,
            ..Default::default()
        };
        assert_eq!(op.maximize(&opts), op.maximize(&opts));
    }

    #[test]
    fn zero_coefficients_give_zero() {
        let s = chain_family(2).unwrap();
        let leb = Weight::lebesgue();
        let op = CubeSum::new(s.members(), vec![0.0; 3], (1.0, 2.0, 2.0), &leb, &leb).unwrap();
        assert_eq!(op.active_atoms(), 0);
        assert_eq!(op.maximize(&AscentOptions::default()).value, 0.0);
    }
}
