//! Involutions over `F_2[X]/(X^K)`: block normal form and repair with a
//! quadratic estimate.

use crate::error::{Error, Result};
use crate::matrix::UMatrix;
use crate::norm::NormValue;
use crate::ring::{Mode, RingSpec};

/// `P A P^{-1} ≡ [[0, I_l, 0], [I_l, 0, 0], [0, 0, B]] mod X^level` with
/// `B ≡ I mod X`.
#[derive(Clone, Debug)]
pub struct BGForm {
    pub p: UMatrix,
    pub l: usize,
    pub b: UMatrix,
    pub level: u32,
}

impl BGForm {
    /// The block matrix with `B` replaced by `b`.
    pub fn assemble(&self, b: &UMatrix) -> UMatrix {
        let ring = self.p.ring();
        let n = self.p.rows();
        let l = self.l;
        let mut m = UMatrix::zeros(ring, n, n);
        for i in 0..l {
            m.set(i, l + i, 1);
            m.set(l + i, i, 1);
        }
        m.set_block(2 * l, 2 * l, b);
        m
    }
}

fn check_char2(ring: RingSpec) -> Result<()> {
    match (ring.mode(), ring.p()) {
        (Mode::EqualChar, 2) => Ok(()),
        (Mode::EqualChar, p) => Err(Error::CharPUnsupported(p as u32)),
        _ => Err(Error::PreconditionViolated("involution repair needs F_2[X]/(X^K)".into())),
    }
}

/// Row reduction over F_2. Returns the pivot columns of `rows`.
fn f2_pivots(mut rows: Vec<Vec<bool>>, ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(pr) = (r..rows.len()).find(|&i| rows[i][c]) else { continue };
        rows.swap(r, pr);
        for i in 0..rows.len() {
            if i != r && rows[i][c] {
                let src = rows[r].clone();
                for (x, y) in rows[i].iter_mut().zip(src) {
                    *x ^= y;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Basis of the null space of an F_2 matrix given by rows.
fn f2_kernel(rows: &[Vec<bool>], n: usize) -> Vec<Vec<bool>> {
    let mut m = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        let Some(pr) = (r..m.len()).find(|&i| m[i][c]) else { continue };
        m.swap(r, pr);
        for i in 0..m.len() {
            if i != r && m[i][c] {
                let src = m[r].clone();
                for (x, y) in m[i].iter_mut().zip(src) {
                    *x ^= y;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![false; n];
            v[f] = true;
            for (ri, &pc) in pivots.iter().enumerate() {
                v[pc] = m[ri][f];
            }
            v
        })
        .collect()
}

fn residue_bits(m: &UMatrix) -> Vec<Vec<bool>> {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| m.get(i, j) & 1 == 1).collect()).collect()
}

fn columns_to_matrix(ring: RingSpec, cols: &[Vec<u64>]) -> UMatrix {
    let n = cols.len();
    let mut m = UMatrix::zeros(ring, n, n);
    for (j, c) in cols.iter().enumerate() {
        for (i, &x) in c.iter().enumerate() {
            m.set(i, j, x);
        }
    }
    m
}

/// Block normal form at level `k`.
///
/// Over `R = F_2[X]/(X^k)`, where `A^2 = I`: with `N̄ = Ā + I`, vectors `w_i`
/// whose images `N̄w_i` are independent span, together with the `Aw_i`, a free
/// `R[C_2]`-summand `F`. The map `ρ(m) = Σ f_j(m) w_j + f_j(Am) Aw_j`, with
/// `f_j` the `w_j`-coordinates of a basis `[w, Aw, z]`, is an equivariant
/// projection onto `F`; its kernel is spanned by `z - ρ(z)` and carries `B`.
pub fn bg_blockform(a: &UMatrix, k: u32) -> Result<BGForm> {
    let ring = a.ring();
    check_char2(ring)?;
    let n = a.rows();
    let kk = ring.precision();
    if k == 0 || k > kk {
        return Err(Error::PreconditionViolated(format!("level {k} outside 1..{kk}")));
    }
    let id = UMatrix::identity(ring, n);
    let d = a.mul(a)?.dist_val(&id)?;
    if d < k {
        return Err(Error::DefectTooLarge { required: k, actual: d });
    }
    let rk = ring.with_precision(k)?;
    let ak = a.reduce(k)?;
    let nbar = residue_bits(&ak.add(&UMatrix::identity(rk, n))?);
    // Columns of N̄ as rows, for pivoting.
    let ncols: Vec<Vec<bool>> = (0..n).map(|j| (0..n).map(|i| nbar[i][j]).collect()).collect();
    let piv = {
        // Greedy: keep column j if it is independent of the kept ones.
        let mut kept: Vec<usize> = Vec::new();
        for j in 0..n {
            let mut trial: Vec<Vec<bool>> = kept.iter().map(|&c| ncols[c].clone()).collect();
            trial.push(ncols[j].clone());
            if f2_pivots(trial, n).len() == kept.len() + 1 {
                kept.push(j);
            }
        }
        kept
    };
    let l = piv.len();
    let images: Vec<Vec<bool>> = piv.iter().map(|&c| ncols[c].clone()).collect();
    let mut span = images.clone();
    let mut zs: Vec<Vec<bool>> = Vec::new();
    for v in f2_kernel(&nbar, n) {
        let mut trial = span.clone();
        trial.push(v.clone());
        if f2_pivots(trial, n).len() == span.len() + 1 {
            span.push(v.clone());
            zs.push(v);
        }
    }
    if zs.len() + 2 * l != n {
        return Err(Error::ReductionFailed(format!("kernel completion has {} vectors, expected {}", zs.len(), n - 2 * l)));
    }

    let unit_vec = |c: usize| -> Vec<u64> { (0..n).map(|i| u64::from(i == c)).collect() };
    let ws: Vec<Vec<u64>> = piv.iter().map(|&c| unit_vec(c)).collect();
    let aws: Vec<Vec<u64>> = ws.iter().map(|w| ak.apply(w)).collect();
    let zk: Vec<Vec<u64>> = zs.iter().map(|z| z.iter().map(|&b| u64::from(b)).collect()).collect();
    let q0 = columns_to_matrix(rk, &[ws.clone(), aws.clone(), zk.clone()].concat());
    let q0inv = q0.inverse().map_err(|_| Error::ReductionFailed("adapted basis is singular".into()))?;
    let f = |j: usize, m: &[u64]| -> u64 {
        (0..n).fold(0, |acc, c| rk.add(acc, rk.mul(q0inv.get(j, c), m[c])))
    };
    let rho = |m: &[u64]| -> Vec<u64> {
        let am = ak.apply(m);
        let mut out = vec![0u64; n];
        for j in 0..l {
            let (x, y) = (f(j, m), f(j, &am));
            for i in 0..n {
                out[i] = rk.add(out[i], rk.add(rk.mul(x, ws[j][i]), rk.mul(y, aws[j][i])));
            }
        }
        out
    };
    let zprime: Vec<Vec<u64>> =
        zk.iter().map(|z| z.iter().zip(rho(z)).map(|(&x, y)| rk.sub(x, y)).collect()).collect();
    let q = columns_to_matrix(rk, &[ws, aws, zprime].concat());
    let pk = q.inverse().map_err(|_| Error::ReductionFailed("complement basis is singular".into()))?;
    let p = pk.lift_to(ring)?;
    let conj = a.conj(&p)?;
    let b = conj.block(2 * l, 2 * l, n - 2 * l, n - 2 * l);
    let form = BGForm { p, l, b, level: k };
    if conj.reduce(k)? != form.assemble(&form.b).reduce(k)? {
        return Err(Error::ReductionFailed(format!("block form does not hold modulo X^{k}")));
    }
    if n > 2 * l && form.b.dist_val(&UMatrix::identity(ring, n - 2 * l))? == 0 {
        return Err(Error::ReductionFailed("B is not congruent to I".into()));
    }
    Ok(form)
}

/// An exact involution `A'` with `2 val(A - A') ≥ val(A^2 - I)`.
///
/// If `A ≡ I mod X`, write `A = I + X^k M` with `k` maximal and recurse on
/// `I + M`; otherwise split off swap blocks with [`bg_blockform`] and recurse
/// on `B`.
pub fn involution_repair(a: &UMatrix) -> Result<UMatrix> {
    let ring = a.ring();
    check_char2(ring)?;
    if !a.is_square() {
        return Err(Error::ShapeMismatch("involution repair needs a square matrix".into()));
    }
    let n = a.rows();
    let kk = ring.precision();
    let id = UMatrix::identity(ring, n);
    if n == 0 {
        return Ok(a.clone());
    }
    let d = a.mul(a)?.dist_val(&id)?;
    if d >= kk {
        return Ok(a.clone());
    }
    if d == 0 {
        return Err(Error::PreconditionViolated("defect is not below 1".into()));
    }
    let k = a.dist_val(&id)?;
    if k >= 1 {
        if 2 * k >= d {
            return Ok(id);
        }
        let m = a.congruence_coords(k)?;
        let inner = UMatrix::identity(m.ring(), n).add(&m)?;
        let repaired = involution_repair(&inner)?;
        let mprime = repaired.sub(&UMatrix::identity(m.ring(), n))?;
        return UMatrix::congruence_lift(&mprime, k, ring);
    }
    let form = bg_blockform(a, d)?;
    let bprime = if form.b.rows() > 0 { involution_repair(&form.b)? } else { form.b.clone() };
    let pinv = form.p.inverse()?;
    pinv.mul(&form.assemble(&bprime))?.mul(&form.p)
}

/// `‖(I + A)^{p^k} - I‖`, checked against `‖A^{p^k}‖ ≤ ‖A‖^{p^k}`.
pub fn frobenius_power_witness(a: &UMatrix, k: u32) -> Result<NormValue> {
    let ring = a.ring();
    if ring.mode() != Mode::EqualChar {
        return Err(Error::PreconditionViolated("Frobenius witness needs equal characteristic".into()));
    }
    let n = a.rows();
    let e = ring.p().pow(k);
    let id = UMatrix::identity(ring, n);
    let lhs = id.add(a)?.pow(e).sub(&id)?.matnorm();
    let rhs = a.pow(e).matnorm();
    if lhs != rhs {
        return Err(Error::VerificationFailed(format!("‖(I+A)^(p^k) - I‖ = {lhs} but ‖A^(p^k)‖ = {rhs}")));
    }
    let bound = (a.val() as u64).saturating_mul(e).min(ring.precision() as u64) as u32;
    if rhs > NormValue::from_val(ring.p(), bound, ring.precision()) {
        return Err(Error::VerificationFailed("‖A^(p^k)‖ exceeds ‖A‖^(p^k)".into()));
    }
    Ok(lhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f2x(k: u32) -> RingSpec {
        RingSpec::fpx(2, k).unwrap()
    }

    #[test]
    fn identity_and_swap_forms() {
        let r = f2x(4);
        let f = bg_blockform(&UMatrix::identity(r, 3), 4).unwrap();
        assert_eq!((f.l, f.b.clone()), (0, UMatrix::identity(r, 3)));
        assert!(f.p.is_identity());
        let swap = UMatrix::from_ints(r, 2, &[0, 1, 1, 0]);
        let f = bg_blockform(&swap, 4).unwrap();
        assert_eq!((f.l, f.b.rows()), (1, 0));
    }

    #[test]
    fn scalar_quadratic_case() {
        let r = f2x(6);
        let a = UMatrix::diag(r, &[r.from_digits(&[1, 0, 1]).unwrap()]);
        let d = a.mul(&a).unwrap().dist_val(&UMatrix::identity(r, 1)).unwrap();
        assert_eq!(d, 4);
        let out = involution_repair(&a).unwrap();
        assert!(out.is_identity());
        assert_eq!(a.dist_val(&out).unwrap(), 2);
    }

    #[test]
    fn frobenius_example() {
        let r = f2x(6);
        let a = UMatrix::diag(r, &[r.from_digits(&[0, 1]).unwrap()]);
        assert_eq!(frobenius_power_witness(&a, 1).unwrap(), NormValue::from_val(2, 2, 6));
        assert!(frobenius_power_witness(&UMatrix::zeros(r, 2, 2), 2).unwrap().is_saturated());
    }
}
