//! Seeded randomized checks of the matrix norm laws.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::UMatrix;
use crate::monomial::monomial_commutant;
use crate::ring::RingSpec;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub ring: RingSpec,
    pub n: usize,
    pub samples: u64,
    pub seed: u64,
    /// Violations per law; every law appears even with zero.
    pub violations: BTreeMap<String, u64>,
}

impl SuiteReport {
    pub fn total_violations(&self) -> u64 {
        self.violations.values().sum()
    }
}

/// Random matrix with entries scaled by a random power of the uniformizer.
pub fn random_matrix(ring: RingSpec, n: usize, rng: &mut impl Rng) -> UMatrix {
    let shift = rng.gen_range(0..=ring.precision());
    let codes = (0..n * n).map(|_| ring.shift_up(rng.gen_range(0..ring.size()), shift)).collect();
    UMatrix::from_codes(ring, n, n, codes).expect("canonical codes")
}

/// Random element of `GL_n(o/p^K)` by rejection.
pub fn random_gl(ring: RingSpec, n: usize, rng: &mut impl Rng) -> UMatrix {
    loop {
        let codes = (0..n * n).map(|_| rng.gen_range(0..ring.size())).collect();
        let m = UMatrix::from_codes(ring, n, n, codes).expect("canonical codes");
        if m.is_gl() {
            return m;
        }
    }
}

pub const NORM_LAWS: [&str; 6] =
    ["ultrametric", "submultiplicative", "operator-norm", "gl-norm-one", "gl-perturbation", "gl-invariance"];

/// Each sample checks all six laws once.
pub fn norm_law_suite(ring: RingSpec, n: usize, samples: u64, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations: BTreeMap<String, u64> = NORM_LAWS.iter().map(|s| (s.to_string(), 0)).collect();
    let mut bad = |law: &str, ok: bool| {
        if !ok {
            *violations.get_mut(law).expect("known law") += 1;
        }
    };
    for _ in 0..samples {
        let (a, b, c) = (random_matrix(ring, n, &mut rng), random_matrix(ring, n, &mut rng), random_matrix(ring, n, &mut rng));
        // d(a, c) ≤ max(d(a, b), d(b, c)); valuations reverse the order
        bad("ultrametric", a.dist_val(&c)? >= a.dist_val(&b)?.min(b.dist_val(&c)?));
        bad("submultiplicative", a.mul(&b)?.val() >= (a.val() + b.val()).min(ring.precision()));
        let col_min = (0..n).map(|j| a.column(j).iter().map(|&x| ring.val(x)).min().unwrap()).min().unwrap();
        let v: Vec<u64> = (0..n).map(|_| rng.gen_range(0..ring.size())).collect();
        let av_val = a.apply(&v).iter().map(|&x| ring.val(x)).min().unwrap();
        let v_val = v.iter().map(|&x| ring.val(x)).min().unwrap();
        bad("operator-norm", col_min == a.val() && av_val >= (a.val() + v_val).min(ring.precision()));
        let g = random_gl(ring, n, &mut rng);
        let h = random_gl(ring, n, &mut rng);
        bad("gl-norm-one", g.val() == 0 && g.inverse()?.val() == 0);
        let near = g.add(&random_matrix(ring, n, &mut rng).shift_up(1))?;
        bad("gl-perturbation", near.is_gl());
        bad("gl-invariance", g.mul(&a)?.val() == a.val() && a.mul(&h)?.val() == a.val() && g.mul(&a)?.mul(&h)?.val() == a.val());
    }
    Ok(SuiteReport { suite: "norm-laws".into(), ring, n, samples, seed, violations })
}

/// Random invertible monomial matrix: a random permutation times random units.
pub fn random_monomial(ring: RingSpec, n: usize, rng: &mut impl Rng) -> UMatrix {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    let mut m = UMatrix::zeros(ring, n, n);
    for (i, &j) in perm.iter().enumerate() {
        let unit = loop {
            let u = rng.gen_range(0..ring.size());
            if ring.is_unit(u) {
                break u;
            }
        };
        m.set(i, j, unit);
    }
    m
}

pub const MONOMIAL_LAWS: [&str; 3] = ["exact-commutation", "certified-bound", "commutator-bound-unobstructed"];

/// `n` is the largest dimension; each sample draws its own in `1..=n`.
/// The plain commutator bound is only counted on inputs where every orbit
/// ratio product is 1.
pub fn monomial_suite(ring: RingSpec, n: usize, samples: u64, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations: BTreeMap<String, u64> = MONOMIAL_LAWS.iter().map(|s| (s.to_string(), 0)).collect();
    for _ in 0..samples {
        let dim = rng.gen_range(1..=n);
        let p = random_monomial(ring, dim, &mut rng);
        let d = random_matrix(ring, dim, &mut rng);
        match monomial_commutant(&p, &d) {
            Ok(rep) => {
                let law = "commutator-bound-unobstructed";
                if rep.orbits.iter().all(|o| o.mu_defect_val >= ring.precision()) && !rep.commutator_bound_holds {
                    *violations.get_mut(law).expect("known law") += 1;
                }
            }
            Err(Error::VerificationFailed(msg)) => {
                let law = if msg.contains("commute") { "exact-commutation" } else { "certified-bound" };
                *violations.get_mut(law).expect("known law") += 1;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(SuiteReport { suite: "monomial".into(), ring, n, samples, seed, violations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_is_clean() {
        let r = RingSpec::zp(3, 4).unwrap();
        let rep = norm_law_suite(r, 2, 200, 7).unwrap();
        assert_eq!(rep.total_violations(), 0);
        assert_eq!(rep.violations.len(), 6);
    }

    #[test]
    fn monomial_small_run_is_clean() {
        let r = RingSpec::zp(3, 4).unwrap();
        assert_eq!(monomial_suite(r, 4, 100, 1).unwrap().total_violations(), 0);
    }
}
