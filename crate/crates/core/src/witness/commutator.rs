//! Almost-commuting pairs `I + A`, `I + B` and the brute-force distance to
//! the nearest exactly commuting pair.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::UMatrix;
use crate::norm::NormValue;
use crate::ring::RingSpec;

/// `A = ω̄^a E_12`, `B = ω̄^a E_21`, so `‖AB − BA‖ = p^{-2a}`.
pub fn make_commutator_witness(ring: RingSpec, n: usize, a: u32) -> Result<(UMatrix, UMatrix)> {
    if a == 0 || n < 2 {
        return Err(Error::PreconditionViolated(format!("need a >= 1 and n >= 2, got a = {a}, n = {n}")));
    }
    let w = ring.shift_up(1, a);
    Ok((UMatrix::unit(ring, n, 0, 1).scale(w), UMatrix::unit(ring, n, 1, 0).scale(w)))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CommutatorOracleReport {
    pub ring: RingSpec,
    pub n: usize,
    pub a: u32,
    pub commutator_norm: NormValue,
    /// Distance from `(I + A, I + B)` to the nearest commuting pair.
    pub nearest_distance: NormValue,
    pub matrices_scanned: u64,
    pub invertible: u64,
    pub pairs_checked: u64,
    pub nearest_pair: (Vec<serde_json::Value>, Vec<serde_json::Value>),
}

fn raw_mul(ring: &RingSpec, n: usize, x: &[u64], y: &[u64]) -> Vec<u64> {
    let mut out = vec![0; n * n];
    for i in 0..n {
        for k in 0..n {
            let a = x[i * n + k];
            if a == 0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] = ring.add(out[i * n + j], ring.mul(a, y[k * n + j]));
            }
        }
    }
    out
}

fn raw_dist(ring: &RingSpec, x: &[u64], y: &[u64]) -> u32 {
    x.iter().zip(y).map(|(&a, &b)| ring.val(ring.sub(a, b))).min().unwrap_or(ring.precision())
}

/// Exhaustive minimum over commuting invertible pairs `(B1, B2)` of
/// `max(‖I + A − B1‖, ‖I + B − B2‖)`.
pub fn commutator_witness_oracle(ring: RingSpec, n: usize, a: u32, cap: u64) -> Result<CommutatorOracleReport> {
    let (ma, mb) = make_commutator_witness(ring, n, a)?;
    let cells = (n * n) as u32;
    let total = ring.size().checked_pow(cells).filter(|t| *t <= cap).ok_or(Error::CapExceeded {
        what: format!("{}^{} matrices", ring.size(), cells),
        cap,
    })?;
    let commutator_norm = ma.mul(&mb)?.sub(&mb.mul(&ma)?)?.matnorm();
    let id = UMatrix::identity(ring, n);
    let ta = id.add(&ma)?.codes().to_vec();
    let tb = id.add(&mb)?.codes().to_vec();

    let mut inv = Vec::new();
    for idx in 0..total {
        let mut rest = idx;
        let codes: Vec<u64> = (0..cells)
            .map(|_| {
                let c = rest % ring.size();
                rest /= ring.size();
                c
            })
            .collect();
        let m = UMatrix::from_codes(ring, n, n, codes.clone())?;
        if m.is_gl() {
            inv.push(codes);
        }
    }
    // candidates sorted by closeness, ties kept in enumeration order
    let mut by_a: Vec<(u32, usize)> = inv.iter().enumerate().map(|(i, m)| (raw_dist(&ring, &ta, m), i)).collect();
    let mut by_b: Vec<(u32, usize)> = inv.iter().enumerate().map(|(i, m)| (raw_dist(&ring, &tb, m), i)).collect();
    by_a.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));
    by_b.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));

    let mut best: Option<(u32, usize, usize)> = None;
    let mut pairs = 0u64;
    for &(da, ia) in &by_a {
        if best.is_some_and(|b| da <= b.0) {
            break;
        }
        for &(db, ib) in &by_b {
            let cand = da.min(db);
            if best.is_some_and(|b| cand <= b.0) {
                break;
            }
            pairs += 1;
            let (x, y) = (&inv[ia], &inv[ib]);
            if raw_mul(&ring, n, x, y) == raw_mul(&ring, n, y, x) {
                best = Some((cand, ia, ib));
                break;
            }
        }
    }
    // the identity pair always commutes, so a minimizer exists
    let (v, ia, ib) = best.expect("identity pair commutes");
    let enc = |m: &[u64]| m.iter().map(|&c| ring.encode(c)).collect::<Vec<_>>();
    Ok(CommutatorOracleReport {
        ring,
        n,
        a,
        commutator_norm,
        nearest_distance: NormValue::from_val(ring.p(), v, ring.precision()),
        matrices_scanned: total,
        invertible: inv.len() as u64,
        pairs_checked: pairs,
        nearest_pair: (enc(&inv[ia]), enc(&inv[ib])),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn witness_commutator_norm() {
        let r = RingSpec::zp(3, 6).unwrap();
        let (a, b) = make_commutator_witness(r, 3, 2).unwrap();
        let c = a.mul(&b).unwrap().sub(&b.mul(&a).unwrap()).unwrap();
        assert_eq!(c.val(), 4);
    }

    #[test]
    fn zero_witness_is_saturated() {
        let r = RingSpec::zp(2, 1).unwrap();
        let rep = commutator_witness_oracle(r, 2, 1, 1 << 20).unwrap();
        assert!(rep.nearest_distance.is_saturated());
    }
}
