//! Cochains of a finite image with values in `M_n(o/p^q)` and the two
//! solvers used by the lifting loop: averaging over the group, with the local
//! Smith-form solver as a fallback.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::UMatrix;
use crate::presentation::FiniteImage;
use crate::ring::{nu_p, RingSpec};
use crate::smith::{solve_linear, LinearSolution};

/// Conjugation action `g·M = A_g M A_g^{-1}` on `M_n(o/p^q)`.
#[derive(Clone, Debug)]
pub struct Action {
    mats: Vec<UMatrix>,
    invs: Vec<UMatrix>,
}

impl Action {
    /// Action through matrices given at any precision `≥ q`.
    pub fn new(mats: &[UMatrix], q: u32) -> Result<Action> {
        let mats = mats.iter().map(|m| m.reduce(q)).collect::<Result<Vec<_>>>()?;
        let invs = mats.iter().map(|m| m.inverse()).collect::<Result<Vec<_>>>()?;
        Ok(Action { mats, invs })
    }

    pub fn act(&self, g: usize, m: &UMatrix) -> UMatrix {
        self.mats[g].mul(m).and_then(|x| x.mul(&self.invs[g])).expect("action shapes")
    }

    fn ring(&self) -> RingSpec {
        self.mats[0].ring()
    }
}

/// Function on pairs of group elements, indexed `g * N + h`.
#[derive(Clone, Debug)]
pub struct Cochain2 {
    /// Congruence level of the coordinates.
    pub level: u32,
    pub values: Vec<UMatrix>,
    pub action: Action,
}

/// Function on group elements.
#[derive(Clone, Debug)]
pub struct Cochain1 {
    pub level: u32,
    pub values: Vec<UMatrix>,
    pub action: Action,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    Averaging,
    Linear,
    /// Averaging result that is only correct to reduced precision.
    AveragingReduced,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SolveReport {
    pub solver: Solver,
    /// `ν_p(|C|)`, the number of digits the division by `|C|` may cost.
    pub averaging_loss: u32,
    /// Valuation of the residual after substitution.
    pub residual_val: u32,
}

fn vmin(ms: impl Iterator<Item = u32>, k: u32) -> u32 {
    ms.fold(k, u32::min)
}

impl Cochain2 {
    pub fn ring(&self) -> RingSpec {
        self.action.ring()
    }

    pub fn get(&self, c: &FiniteImage, g: usize, h: usize) -> &UMatrix {
        &self.values[g * c.order() + h]
    }

    /// Minimal valuation of `g·z(h,k) - z(gh,k) + z(g,hk) - z(g,h)` over the
    /// given triples.
    pub fn identity_residual(&self, c: &FiniteImage, triples: impl Iterator<Item = (usize, usize, usize)>) -> u32 {
        let q = self.ring().precision();
        vmin(
            triples.map(|(g, h, k)| {
                let lhs = self
                    .action
                    .act(g, self.get(c, h, k))
                    .sub(self.get(c, c.mul(g, h), k))
                    .and_then(|x| x.add(self.get(c, g, c.mul(h, k))))
                    .and_then(|x| x.sub(self.get(c, g, h)))
                    .expect("cochain shapes");
                lhs.val()
            }),
            q,
        )
    }

    fn check_identity(&self, c: &FiniteImage) -> Result<()> {
        let n = c.order();
        let q = self.ring().precision();
        let res = if n <= 40 {
            self.identity_residual(c, (0..n * n * n).map(|x| (x / (n * n), (x / n) % n, x % n)))
        } else {
            let gens = c.generator_indices().to_vec();
            self.identity_residual(
                c,
                (0..n * n).flat_map(move |x| gens.clone().into_iter().map(move |s| (x / n, x % n, s))),
            )
        };
        if res < q {
            return Err(Error::VerificationFailed(format!("2-cocycle identity fails at valuation {res}")));
        }
        Ok(())
    }
}

impl Cochain1 {
    pub fn ring(&self) -> RingSpec {
        self.action.ring()
    }

    /// `δc(g,h) = g·c(h) - c(gh) + c(g)`.
    pub fn coboundary_at(&self, c: &FiniteImage, g: usize, h: usize) -> UMatrix {
        self.action
            .act(g, &self.values[h])
            .sub(&self.values[c.mul(g, h)])
            .and_then(|x| x.add(&self.values[g]))
            .expect("cochain shapes")
    }

    /// Minimal valuation of `δc - z` over all pairs.
    pub fn residual_against(&self, c: &FiniteImage, z: &Cochain2) -> u32 {
        let n = c.order();
        vmin(
            (0..n * n).map(|x| {
                let (g, h) = (x / n, x % n);
                self.coboundary_at(c, g, h).sub(z.get(c, g, h)).expect("same ring").val()
            }),
            self.ring().precision(),
        )
    }
}

/// Divide every entry of `b` by `N = p^a m`. Fails with the valuation of the
/// first entry that is not divisible by `p^a`.
fn divide_by_order(b: &UMatrix, order: usize) -> std::result::Result<UMatrix, u32> {
    let r = b.ring();
    let a = nu_p(r.p(), order as u64);
    let m = (order as u64) / r.p().pow(a);
    let m_inv = r.inv(r.from_int(m as i64)).expect("prime-to-p part is a unit");
    let mut out = UMatrix::zeros(r, b.rows(), b.cols());
    for i in 0..b.rows() {
        for j in 0..b.cols() {
            let x = b.get(i, j);
            let y = r.shift_down(x, a).map_err(|_| r.val(x))?;
            out.set(i, j, r.mul(m_inv, y));
        }
    }
    Ok(out)
}

fn unpack(ring: RingSpec, n: usize, x: &[u64], offset: usize) -> UMatrix {
    UMatrix::from_codes(ring, n, n, x[offset..offset + n * n].to_vec()).expect("solver output is canonical")
}

/// Coefficient of `X[u][v]` in entry `(r, c)` of `A X A^{-1}` is
/// `A[r][u] · A^{-1}[v][c]`.
fn add_action_block(sys: &mut UMatrix, row0: usize, col0: usize, a: &UMatrix, ainv: &UMatrix, sign_neg: bool) {
    let r = sys.ring();
    let n = a.rows();
    for rr in 0..n {
        for cc in 0..n {
            for u in 0..n {
                for v in 0..n {
                    let mut f = r.mul(a.get(rr, u), ainv.get(v, cc));
                    if sign_neg {
                        f = r.neg(f);
                    }
                    let (i, j) = (row0 + rr * n + cc, col0 + u * n + v);
                    sys.set(i, j, r.add(sys.get(i, j), f));
                }
            }
        }
    }
}

fn add_identity_block(sys: &mut UMatrix, row0: usize, col0: usize, n: usize, sign_neg: bool) {
    let r = sys.ring();
    let f = if sign_neg { r.neg(1) } else { 1 };
    for e in 0..n * n {
        let (i, j) = (row0 + e, col0 + e);
        sys.set(i, j, r.add(sys.get(i, j), f));
    }
}

/// The failure of a set-section to be multiplicative, in coordinates.
///
/// `sections[g]` lifts the element `g` of `C` (given at precision `≥ t`).
/// With `f(g,h) = σ(g)σ(h)σ(gh)^{-1} ∈ G_k`, the cochain is the coordinate
/// matrix of `f` at level `j` modulo `p^{t-j}`, which is a 2-cocycle for the
/// conjugation action when `t ≤ 2j` and `j ≤ k`.
pub fn build_defect_cocycle(sections: &[UMatrix], c: &FiniteImage, j: u32, t: u32) -> Result<Cochain2> {
    let n = c.order();
    let q = t - j;
    let ring_t = sections[0].ring().with_precision(t)?;
    let secs = sections.iter().map(|s| s.reduce(t)).collect::<Result<Vec<_>>>()?;
    let invs = secs.iter().map(|s| s.inverse()).collect::<Result<Vec<_>>>()?;
    let mut values = Vec::with_capacity(n * n);
    for g in 0..n {
        for h in 0..n {
            let f = secs[g].mul(&secs[h])?.mul(&invs[c.mul(g, h)])?;
            debug_assert_eq!(f.ring(), ring_t);
            let coords = f.congruence_coords(j).map_err(|e| match e {
                Error::NotInBall { actual, .. } => Error::DefectTooLarge { required: j, actual },
                other => other,
            })?;
            values.push(coords.reduce(q)?);
        }
    }
    let z = Cochain2 { level: j, values, action: Action::new(&secs, q)? };
    z.check_identity(c)?;
    Ok(z)
}

/// Solve `δc = z`. First by averaging, `c = (1/|C|) Σ_h z(·,h)`, then by the
/// linear system restricted to generator pairs `(g, s)`.
pub fn average_solve_h2(z: &Cochain2, c: &FiniteImage) -> Result<(Cochain1, SolveReport)> {
    let n = c.order();
    let ring = z.ring();
    let q = ring.precision();
    let loss = nu_p(ring.p(), n as u64);
    let dim = z.values[0].rows();

    let mut averaged: Option<Cochain1> = None;
    let mut obstruction = q;
    let mut sums = Vec::with_capacity(n);
    for g in 0..n {
        let mut b = UMatrix::zeros(ring, dim, dim);
        for h in 0..n {
            b = b.add(z.get(c, g, h))?;
        }
        sums.push(b);
    }
    match sums.iter().map(|b| divide_by_order(b, n)).collect::<std::result::Result<Vec<_>, u32>>() {
        Ok(values) => {
            let cand = Cochain1 { level: z.level, values, action: z.action.clone() };
            let res = cand.residual_against(c, z);
            if res >= q {
                let report = SolveReport { solver: Solver::Averaging, averaging_loss: loss, residual_val: res };
                return Ok((cand, report));
            }
            averaged = Some(cand);
        }
        Err(v) => obstruction = v,
    }

    if let Some(sol) = linear_solve_h2(z, c)? {
        let res = sol.residual_against(c, z);
        let report = SolveReport { solver: Solver::Linear, averaging_loss: loss, residual_val: res };
        return Ok((sol, report));
    }
    match averaged {
        Some(cand) => {
            let res = cand.residual_against(c, z);
            Ok((cand, SolveReport { solver: Solver::AveragingReduced, averaging_loss: loss, residual_val: res }))
        }
        None => Err(Error::Unsolvable(obstruction)),
    }
}

/// Unknowns `c(g)` for every `g`; equations `δc(g,s) = z(g,s)` for every `g`
/// and every generator `s`. These determine `δc = z` on all pairs because
/// `z(g,1) = 0` and the generators generate `C` as a monoid.
fn linear_solve_h2(z: &Cochain2, c: &FiniteImage) -> Result<Option<Cochain1>> {
    let ring = z.ring();
    let order = c.order();
    let dim = z.values[0].rows();
    let nn = dim * dim;
    let mut gens = c.generator_indices().to_vec();
    gens.sort_unstable();
    gens.dedup();
    let rows = order * gens.len() * nn;
    let mut sys = UMatrix::zeros(ring, rows, order * nn);
    let mut rhs = vec![0u64; rows];
    for g in 0..order {
        for (si, &s) in gens.iter().enumerate() {
            let row0 = (g * gens.len() + si) * nn;
            add_action_block(&mut sys, row0, s * nn, &z.action.mats[g], &z.action.invs[g], false);
            add_identity_block(&mut sys, row0, c.mul(g, s) * nn, dim, true);
            add_identity_block(&mut sys, row0, g * nn, dim, false);
            rhs[row0..row0 + nn].copy_from_slice(z.get(c, g, s).codes());
        }
    }
    Ok(match solve_linear(&sys, &rhs) {
        LinearSolution::Solved { particular, .. } => Some(Cochain1 {
            level: z.level,
            values: (0..order).map(|g| unpack(ring, dim, &particular, g * nn)).collect(),
            action: z.action.clone(),
        }),
        LinearSolution::Unsolvable { .. } => None,
    })
}

/// Solve `c(g) = T - g·T` for a 1-cocycle `c` (the discrepancy of two
/// homomorphisms), by `T = (1/|C|) Σ_g c(g)` and otherwise linearly over the
/// generators.
pub fn solve_h1_conjugator(cc: &Cochain1, c: &FiniteImage) -> Result<(UMatrix, SolveReport)> {
    let ring = cc.ring();
    let q = ring.precision();
    let order = c.order();
    let loss = nu_p(ring.p(), order as u64);
    let dim = cc.values[0].rows();
    let residual = |t: &UMatrix| -> u32 {
        vmin(
            (0..order).map(|g| {
                t.sub(&cc.action.act(g, t)).and_then(|x| x.sub(&cc.values[g])).expect("same ring").val()
            }),
            q,
        )
    };

    let mut b = UMatrix::zeros(ring, dim, dim);
    for v in &cc.values {
        b = b.add(v)?;
    }
    let mut averaged = None;
    let mut obstruction = q;
    match divide_by_order(&b, order) {
        Ok(t) => {
            let res = residual(&t);
            if res >= q {
                return Ok((t, SolveReport { solver: Solver::Averaging, averaging_loss: loss, residual_val: res }));
            }
            averaged = Some(t);
        }
        Err(v) => obstruction = v,
    }

    let mut gens = c.generator_indices().to_vec();
    gens.sort_unstable();
    gens.dedup();
    let nn = dim * dim;
    let mut sys = UMatrix::zeros(ring, gens.len() * nn, nn);
    let mut rhs = vec![0u64; gens.len() * nn];
    for (si, &s) in gens.iter().enumerate() {
        add_identity_block(&mut sys, si * nn, 0, dim, false);
        add_action_block(&mut sys, si * nn, 0, &cc.action.mats[s], &cc.action.invs[s], true);
        rhs[si * nn..(si + 1) * nn].copy_from_slice(cc.values[s].codes());
    }
    if let LinearSolution::Solved { particular, .. } = solve_linear(&sys, &rhs) {
        let t = unpack(ring, dim, &particular, 0);
        let res = residual(&t);
        return Ok((t, SolveReport { solver: Solver::Linear, averaging_loss: loss, residual_val: res }));
    }
    match averaged {
        Some(t) => {
            let res = residual(&t);
            Ok((t, SolveReport { solver: Solver::AveragingReduced, averaging_loss: loss, residual_val: res }))
        }
        None => Err(Error::Unsolvable(obstruction)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_cocycle_gives_zero() {
        let r = RingSpec::zp(2, 8).unwrap();
        let m = UMatrix::from_ints(r, 2, &[0, -1, 1, -1]);
        let c = FiniteImage::generate(&[m.clone()], 100).unwrap();
        let secs: Vec<UMatrix> = c.elements().to_vec();
        let z = build_defect_cocycle(&secs, &c, 3, 6).unwrap();
        assert!(z.values.iter().all(|v| v.is_zero()));
        let (sol, rep) = average_solve_h2(&z, &c).unwrap();
        assert!(sol.values.iter().all(|v| v.is_zero()));
        assert_eq!(rep.solver, Solver::Averaging);
        assert_eq!(rep.averaging_loss, 0);
    }
}
