//! Nearest matrix commuting with a monomial matrix, by propagating entries
//! along the orbits of `σ` acting diagonally on index pairs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::UMatrix;
use crate::ring::{Mode, RingSpec};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub representative: (usize, usize),
    pub length: usize,
    /// `val(1 − μ)` for the product `μ` of `λ` ratios around the orbit.
    pub mu_defect_val: u32,
    /// The representative had to be truncated into the annihilator of `1 − μ`.
    pub obstructed: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonomialReport {
    pub d_prime: UMatrix,
    /// `val(PD − DP)`.
    pub commutator_val: u32,
    /// `val(D − D')`.
    pub distance_val: u32,
    /// `val` of `‖PD − DP‖ / min |1 − μ|` over obstructed orbits.
    pub bound_val: u32,
    /// Whether `‖D − D'‖ ≤ ‖PD − DP‖` held.
    pub commutator_bound_holds: bool,
    pub orbits: Vec<OrbitRecord>,
}

/// `σ` and `λ` with `P_{i, σ(i)} = λ_i`.
pub fn monomial_data(p: &UMatrix) -> Result<(Vec<usize>, Vec<u64>)> {
    let n = p.rows();
    if !p.is_square() {
        return Err(Error::NotMonomial("not square".into()));
    }
    let ring = p.ring();
    let mut sigma = Vec::with_capacity(n);
    let mut lambda = Vec::with_capacity(n);
    let mut hit = vec![false; n];
    for i in 0..n {
        let nz: Vec<usize> = (0..n).filter(|&j| p.get(i, j) != 0).collect();
        let [j] = nz[..] else {
            return Err(Error::NotMonomial(format!("row {i} has {} nonzero entries", nz.len())));
        };
        if std::mem::replace(&mut hit[j], true) {
            return Err(Error::NotMonomial(format!("column {j} has several nonzero entries")));
        }
        if !ring.is_unit(p.get(i, j)) {
            return Err(Error::NonInvertible(ring.val(p.get(i, j))));
        }
        sigma.push(j);
        lambda.push(p.get(i, j));
    }
    Ok((sigma, lambda))
}

/// Zero the digits of `x` below `a`, i.e. the nearest element of `ω̄^a o`.
fn round_to(ring: &RingSpec, x: u64, a: u32) -> u64 {
    let low = ring.truncate(x, a);
    match ring.mode() {
        Mode::MixedChar => ring.sub(x, low),
        Mode::EqualChar => x - low,
    }
}

/// `D'` commuting with `P`, built orbit by orbit from a representative
/// entry. When the ratio product `μ` around an orbit is not 1, the
/// representative is rounded into the annihilator of `1 − μ`.
pub fn monomial_commutant(p: &UMatrix, d: &UMatrix) -> Result<MonomialReport> {
    let (sigma, lambda) = monomial_data(p)?;
    let ring = p.ring();
    ring.check_same(&d.ring())?;
    let n = p.rows();
    if d.rows() != n || d.cols() != n {
        return Err(Error::ShapeMismatch("D must match P".into()));
    }
    let k = ring.precision();
    let inv: Vec<u64> = lambda.iter().map(|&l| ring.inv(l)).collect::<Result<_>>()?;
    let commutator_val = p.mul(d)?.dist_val(&d.mul(p)?)?;
    let ratio = |i: usize, j: usize| ring.mul(inv[i], lambda[j]);

    let mut dp = UMatrix::zeros(ring, n, n);
    let mut seen = vec![false; n * n];
    let mut orbits = Vec::new();
    let mut bound_val = commutator_val;
    for i0 in 0..n {
        for j0 in 0..n {
            if seen[i0 * n + j0] {
                continue;
            }
            let mut path = vec![(i0, j0)];
            let mut coef = vec![1u64];
            let (mut i, mut j) = (i0, j0);
            loop {
                seen[i * n + j] = true;
                let c = ring.mul(*coef.last().unwrap(), ratio(i, j));
                (i, j) = (sigma[i], sigma[j]);
                if (i, j) == (i0, j0) {
                    coef.push(c);
                    break;
                }
                path.push((i, j));
                coef.push(c);
            }
            let mu = coef.pop().unwrap();
            let v_mu = ring.val(ring.sub(1, mu));
            let x0 = d.get(i0, j0);
            let x = round_to(&ring, x0, k - v_mu.min(k));
            let obstructed = x != x0;
            if obstructed {
                bound_val = bound_val.min(commutator_val.saturating_sub(v_mu));
            }
            for (&(a, b), &c) in path.iter().zip(&coef) {
                dp.set(a, b, ring.mul(c, x));
            }
            orbits.push(OrbitRecord { representative: (i0, j0), length: path.len(), mu_defect_val: v_mu, obstructed });
        }
    }
    if p.mul(&dp)? != dp.mul(p)? {
        return Err(Error::VerificationFailed("D' does not commute with P".into()));
    }
    let distance_val = d.dist_val(&dp)?;
    if distance_val < bound_val {
        return Err(Error::VerificationFailed(format!("distance valuation {distance_val} below bound {bound_val}")));
    }
    Ok(MonomialReport {
        d_prime: dp,
        commutator_val,
        distance_val,
        bound_val,
        commutator_bound_holds: distance_val >= commutator_val,
        orbits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn swap_two_orbits() {
        let r = RingSpec::zp(3, 5).unwrap();
        let p = UMatrix::from_ints(r, 2, &[0, 1, 1, 0]);
        let d = UMatrix::from_ints(r, 2, &[4, 0, 0, 13]);
        let rep = monomial_commutant(&p, &d).unwrap();
        // orbit {(0,0),(1,1)} takes the representative value
        assert_eq!(rep.d_prime, UMatrix::from_ints(r, 2, &[4, 0, 0, 4]));
        assert_eq!(rep.distance_val, 2);
        assert_eq!(rep.commutator_val, 2);
    }

    #[test]
    fn rejects_non_monomial() {
        let r = RingSpec::zp(2, 4).unwrap();
        let p = UMatrix::from_ints(r, 2, &[1, 1, 0, 1]);
        assert!(matches!(monomial_commutant(&p, &p), Err(Error::NotMonomial(_))));
    }
}
