//! Cyclic maps `k ↦ (1+x)^k` on `Z/p^i` and their distance to homomorphisms.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::UMatrix;
use crate::norm::NormValue;
use crate::presentation::{ApproxRep, Presentation};
use crate::ring::{Mode, RingSpec, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HdistMode {
    ExactTruncated,
    ExtensionLowerBound,
}

/// Valuation of the roots of `Φ_{p^j}(1+t)`, read off a Newton polygon.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CyclotomicSlope {
    pub j: u32,
    pub degree: u64,
    /// Exponent `v` with `|ξ - 1| = p^{-v}`, as `"num/den"`.
    pub root_valuation: String,
    pub multiplicity: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum HdistWitness {
    /// Every `u` with `u^N = 1` at the working precision.
    Enumerated {
        ring: RingSpec,
        order: u64,
        units_scanned: u64,
        roots: Vec<serde_json::Value>,
        minimizers: Vec<serde_json::Value>,
    },
    /// Equal characteristic: 1 is the only `p`-power root of unity.
    TrivialRootOnly { x_val: u32 },
    Cyclotomic { x_val: u32, slopes: Vec<CyclotomicSlope> },
    /// `p = 2`, `ξ^2 = 1` eigenvalues only: `min(|x|, |x + 2|)`.
    SignEigenvalues { x_val: u32, x_plus_two_val: u32 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HdistCertificate {
    pub mode: HdistMode,
    pub value: NormValue,
    pub witness: HdistWitness,
}

/// The map `⟨s | s^{p^i}⟩ → GL_1`, `s ↦ 1 + x`.
pub fn make_badestimate_rep(i: u32, x: &Scalar) -> Result<ApproxRep> {
    let ring = x.ring();
    let (p, k) = (ring.p(), ring.precision());
    let vx = x.val();
    if vx == 0 || vx >= k {
        return Err(Error::PreconditionViolated(format!("need 1 <= val(x) < K, got val(x) = {vx}")));
    }
    if k <= i + vx {
        return Err(Error::PreconditionViolated(format!("precision {k} must exceed i + val(x) = {}", i + vx)));
    }
    let order = p.checked_pow(i).filter(|n| *n <= i64::MAX as u64).ok_or(Error::CapExceeded {
        what: format!("{p}^{i}"),
        cap: i64::MAX as u64,
    })?;
    let a = ring.add(1, x.code());
    let rep = ApproxRep::new(Presentation::cyclic(order), vec![UMatrix::diag(ring, &[a])])?;
    // |(1+x)^{p^i} - 1| <= p^{-i}|x| in mixed characteristic, = |x|^{p^i} in equal.
    let floor = match ring.mode() {
        Mode::MixedChar => i + vx,
        Mode::EqualChar => (order.saturating_mul(vx as u64)).min(k as u64) as u32,
    };
    let d = rep.defect_val();
    if d < floor.min(k) {
        return Err(Error::VerificationFailed(format!("defect valuation {d} below asserted floor {floor}")));
    }
    Ok(rep)
}

/// The order `N` and image `a` of a rep of `⟨s | s^N⟩` into `GL_1`.
fn cyclic_gl1_data(rep: &ApproxRep) -> Result<(u64, u64)> {
    let pres = rep.presentation();
    if rep.n() != 1 || pres.num_generators() != 1 || pres.relators.len() != 1 {
        return Err(Error::PreconditionViolated("expected a GL_1 rep of a one-relator cyclic group".into()));
    }
    let rel = &pres.relators[0];
    if rel.is_empty() || rel.letters().iter().any(|l| l.inv != rel.letters()[0].inv) {
        return Err(Error::PreconditionViolated("relator is not a power of the generator".into()));
    }
    Ok((rel.len() as u64, rep.image(0).get(0, 0)))
}

/// Exact distance at precision `K` from `k ↦ a^k` (`0 ≤ k < N`) to the
/// nearest homomorphism `k ↦ u^k`, by enumerating every `u` with `u^N = 1`.
pub fn hdist_gl1_cyclic(rep: &ApproxRep, cap: u64) -> Result<HdistCertificate> {
    let ring = rep.ring();
    if ring.size() > cap {
        return Err(Error::CapExceeded { what: format!("enumeration of {ring}"), cap });
    }
    let (order, a) = cyclic_gl1_data(rep)?;
    let k = ring.precision();
    let mut roots = Vec::new();
    let mut units = 0u64;
    for u in 0..ring.size() {
        if !ring.is_unit(u) {
            continue;
        }
        units += 1;
        if ring.pow(u, order) == 1 {
            roots.push(u);
        }
    }
    // minimum over k of val(a^k - u^k); larger is closer
    let mut best = 0u32;
    let mut minimizers = Vec::new();
    for &u in &roots {
        let (mut ak, mut uk) = (1u64, 1u64);
        let mut m = k;
        for _ in 1..order {
            ak = ring.mul(ak, a);
            uk = ring.mul(uk, u);
            m = m.min(ring.val(ring.sub(ak, uk)));
            if m == 0 {
                break;
            }
        }
        if m > best {
            best = m;
            minimizers.clear();
        }
        if m == best {
            minimizers.push(u);
        }
    }
    Ok(HdistCertificate {
        mode: HdistMode::ExactTruncated,
        value: NormValue::from_val(ring.p(), best, k),
        witness: HdistWitness::Enumerated {
            ring,
            order,
            units_scanned: units,
            roots: roots.iter().map(|&u| ring.encode(u)).collect(),
            minimizers: minimizers.iter().map(|&u| ring.encode(u)).collect(),
        },
    })
}

/// `C(n, k) mod p^2` for `k = 0..=n`.
fn binomials_mod_p2(p: u64, n: u64) -> Vec<u64> {
    let m = p * p;
    let inv_mod = |u: u64| -> u64 {
        // u is a unit mod p^2; Euler: u^{φ(p^2) - 1}
        let mut e = p * (p - 1) - 1;
        let (mut b, mut acc) = (u % m, 1u64);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * b % m;
            }
            b = b * b % m;
            e >>= 1;
        }
        acc
    };
    let split = |mut a: u64| -> (u32, u64) {
        let mut v = 0;
        while a % p == 0 {
            a /= p;
            v += 1;
        }
        (v, a % m)
    };
    let mut out = Vec::with_capacity(n as usize + 1);
    let (mut v, mut unit) = (0i64, 1u64);
    out.push(1);
    for k in 1..=n {
        let (vn, un) = split(n - k + 1);
        let (vd, ud) = split(k);
        v += vn as i64 - vd as i64;
        unit = unit * un % m * inv_mod(ud) % m;
        out.push(match v {
            0 => unit,
            1 => p * unit % m,
            _ => 0,
        });
    }
    out
}

/// Lower convex hull slopes of the points `(k, v_k)`; returns
/// `(−slope, horizontal length)` per segment.
fn newton_polygon(points: &[(u64, u32)]) -> Vec<(Ratio<u64>, u64)> {
    let mut hull: Vec<(u64, u32)> = Vec::new();
    for &pt in points {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // drop b if it lies on or above segment a -> pt
            let lhs = (b.1 as i128 - a.1 as i128) * (pt.0 as i128 - a.0 as i128);
            let rhs = (pt.1 as i128 - a.1 as i128) * (b.0 as i128 - a.0 as i128);
            if lhs >= rhs {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    hull.windows(2)
        .filter(|w| w[0].1 > w[1].1)
        .map(|w| (Ratio::new((w[0].1 - w[1].1) as u64, w[1].0 - w[0].0), w[1].0 - w[0].0))
        .collect()
}

/// Root valuations of `Φ_{p^j}(1+t)` from the Newton polygon of its
/// coefficients mod `p^2`. Coefficients divisible by `p^2` never sit on the
/// polygon because the constant term has valuation 1.
pub fn cyclotomic_slopes(p: u64, j: u32) -> Result<CyclotomicSlope> {
    let q = p.checked_pow(j - 1).ok_or(Error::CapExceeded { what: format!("{p}^{}", j - 1), cap: u64::MAX })?;
    let degree = (p - 1) * q;
    const CAP: u64 = 1 << 20;
    if degree > CAP {
        return Err(Error::CapExceeded { what: format!("degree of cyclotomic polynomial {degree}"), cap: CAP });
    }
    let m = p * p;
    let mut coeffs = vec![0u64; degree as usize + 1];
    // Φ_{p^j}(y) = Σ_{r<p} y^{r p^{j-1}}
    for r in 0..p {
        for (c, b) in coeffs.iter_mut().zip(binomials_mod_p2(p, r * q)) {
            *c = (*c + b) % m;
        }
    }
    let points: Vec<(u64, u32)> = coeffs
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let v = if c == 0 { 2 } else if c % p == 0 { 1 } else { 0 };
            (k as u64, v)
        })
        .collect();
    let segs = newton_polygon(&points);
    let [(slope, len)] = segs[..] else {
        return Err(Error::VerificationFailed(format!("cyclotomic polygon for p^{j} has {} segments", segs.len())));
    };
    Ok(CyclotomicSlope { j, degree, root_valuation: slope.to_string(), multiplicity: len })
}

/// Lower bound on the distance from `λ ↦ λ I_n` composed with the cyclic map
/// to any homomorphism, via the eigenvalue argument `‖A − Ξ‖ ≥ |(1+x) − ξ|`.
pub fn hdist_lowerbound_diag(i: u32, x: &Scalar) -> Result<HdistCertificate> {
    let ring = x.ring();
    let (p, k) = (ring.p(), ring.precision());
    let vx = x.val();
    if vx == 0 || vx >= k {
        return Err(Error::PreconditionViolated(format!("need 1 <= val(x) < K, got {vx}")));
    }
    match ring.mode() {
        Mode::EqualChar => Ok(HdistCertificate {
            mode: HdistMode::ExtensionLowerBound,
            value: NormValue::from_val(p, vx, k),
            witness: HdistWitness::TrivialRootOnly { x_val: vx },
        }),
        Mode::MixedChar if p == 2 => Err(Error::P2Unsupported),
        Mode::MixedChar => {
            let mut value = NormValue::from_val(p, vx, k);
            let mut slopes = Vec::new();
            for j in 1..=i {
                let s = cyclotomic_slopes(p, j)?;
                let v = Ratio::new(1, s.degree);
                if s.root_valuation != v.to_string() {
                    return Err(Error::VerificationFailed(format!("unexpected root valuation {}", s.root_valuation)));
                }
                // |x − (ξ − 1)| = max(|x|, |ξ − 1|) since the valuations differ
                value = value.min(NormValue::rational(p, *v.numer(), *v.denom()).max(NormValue::from_val(p, vx, k)));
                slopes.push(s);
            }
            Ok(HdistCertificate {
                mode: HdistMode::ExtensionLowerBound,
                value,
                witness: HdistWitness::Cyclotomic { x_val: vx, slopes },
            })
        }
    }
}

/// `p = 2` bound from the eigenvalues `±1` of an involutive block:
/// `min(|x|, |x + 2|)`.
pub fn hdist_lowerbound_sign(x: &Scalar) -> Result<HdistCertificate> {
    let ring = x.ring();
    if ring.mode() != Mode::MixedChar || ring.p() != 2 {
        return Err(Error::PreconditionViolated("sign eigenvalue bound is for Z/2^K".into()));
    }
    let vx = x.val();
    let v2 = ring.val(ring.add(x.code(), 2));
    let k = ring.precision();
    Ok(HdistCertificate {
        mode: HdistMode::ExtensionLowerBound,
        value: NormValue::from_val(2, vx, k).min(NormValue::from_val(2, v2, k)),
        witness: HdistWitness::SignEigenvalues { x_val: vx, x_plus_two_val: v2 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi3_polygon() {
        // Φ_3(1+t) = t^2 + 3t + 3
        let s = cyclotomic_slopes(3, 1).unwrap();
        assert_eq!((s.degree, s.root_valuation.as_str(), s.multiplicity), (2, "1/2", 2));
    }

    #[test]
    fn binomials_small() {
        assert_eq!(binomials_mod_p2(3, 6), vec![1, 6, 15 % 9, 20 % 9, 15 % 9, 6, 1]);
    }
}
