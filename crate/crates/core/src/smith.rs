//! Local Smith form and linear solving over `o/p^K`.

use serde::Serialize;

use crate::matrix::UMatrix;

/// `U · A · V = diag(ω̄^{d_1}, …)` with `U`, `V` invertible.
#[derive(Clone, Debug)]
pub struct SmithDecomposition {
    pub u: UMatrix,
    pub v: UMatrix,
    /// Non-decreasing; `K` marks a zero diagonal entry.
    pub diag_vals: Vec<u32>,
    det_u: u64,
    det_v: u64,
}

impl SmithDecomposition {
    /// The diagonal matrix `U A V`, with the shape of `A`.
    pub fn diagonal(&self) -> UMatrix {
        let r = self.u.ring();
        let mut d = UMatrix::zeros(r, self.u.rows(), self.v.cols());
        for (i, &v) in self.diag_vals.iter().enumerate() {
            d.set(i, i, r.shift_up(1, v));
        }
        d
    }

    /// `det A = Π ω̄^{d_i} / (det U det V)` for square `A`.
    pub(crate) fn det_a(&self) -> u64 {
        let r = self.u.ring();
        let mut prod = 1u64;
        for &v in &self.diag_vals {
            prod = r.mul(prod, r.shift_up(1, v));
        }
        let units = r.mul(self.det_u, self.det_v);
        r.mul(prod, r.inv(units).expect("transforms are invertible"))
    }
}

/// Unit-pivot elimination: the pivot is the entry of minimal valuation in the
/// remaining block, ties broken by lowest row, then lowest column.
pub fn smith_local(a: &UMatrix) -> SmithDecomposition {
    let r = a.ring();
    let kk = r.precision();
    let (rows, cols) = (a.rows(), a.cols());
    let mut m = a.clone();
    let mut u = UMatrix::identity(r, rows);
    let mut v = UMatrix::identity(r, cols);
    let (mut det_u, mut det_v) = (1u64, 1u64);
    let minus_one = r.neg(1);
    let steps = rows.min(cols);
    let mut diag_vals = Vec::with_capacity(steps);

    for t in 0..steps {
        let mut best = (kk, t, t);
        'scan: for i in t..rows {
            for j in t..cols {
                let val = r.val(m.get(i, j));
                if val < best.0 {
                    best = (val, i, j);
                    if val == 0 {
                        break 'scan;
                    }
                }
            }
        }
        let (d, pi, pj) = best;
        if d == kk {
            diag_vals.extend(std::iter::repeat(kk).take(steps - t));
            break;
        }
        if pi != t {
            m.swap_rows(t, pi);
            u.swap_rows(t, pi);
            det_u = r.mul(det_u, minus_one);
        }
        if pj != t {
            m.swap_cols(t, pj);
            v.swap_cols(t, pj);
            det_v = r.mul(det_v, minus_one);
        }
        let unit = r.shift_down(m.get(t, t), d).expect("pivot valuation");
        let s = r.inv(unit).expect("pivot unit part");
        m.scale_row(t, s);
        u.scale_row(t, s);
        det_u = r.mul(det_u, s);
        for i in t + 1..rows {
            let x = m.get(i, t);
            if x != 0 {
                let f = r.shift_down(x, d).expect("pivot divides column");
                m.add_row_multiple(i, t, r.neg(f));
                u.add_row_multiple(i, t, r.neg(f));
            }
        }
        for j in t + 1..cols {
            let x = m.get(t, j);
            if x != 0 {
                let f = r.shift_down(x, d).expect("pivot divides row");
                m.add_col_multiple(j, t, r.neg(f));
                v.add_col_multiple(j, t, r.neg(f));
            }
        }
        diag_vals.push(d);
    }
    SmithDecomposition { u, v, diag_vals, det_u, det_v }
}

/// Generator `ω̄^valuation · vector` of the solution lattice of `A x = 0`.
#[derive(Clone, Debug, Serialize)]
pub struct KernelGen {
    pub vector: Vec<u64>,
    pub valuation: u32,
}

#[derive(Clone, Debug)]
pub enum LinearSolution {
    Solved { particular: Vec<u64>, kernel: Vec<KernelGen> },
    Unsolvable { obstruction_val: u32 },
}

impl LinearSolution {
    pub fn particular(&self) -> Option<&[u64]> {
        match self {
            LinearSolution::Solved { particular, .. } => Some(particular),
            LinearSolution::Unsolvable { .. } => None,
        }
    }
}

/// Solve `A x = b`. With `U A V = D`, put `y = V^{-1} x` and solve `D y = U b`
/// coordinatewise.
pub fn solve_linear(a: &UMatrix, b: &[u64]) -> LinearSolution {
    assert_eq!(a.rows(), b.len(), "solve_linear: right-hand side length");
    let r = a.ring();
    let kk = r.precision();
    let sd = smith_local(a);
    let c = sd.u.apply(b);
    let cols = a.cols();
    let mut y = vec![0u64; cols];
    let mut obstruction: Option<u32> = None;
    let mut note = |v: u32| obstruction = Some(obstruction.map_or(v, |o: u32| o.min(v)));
    for (i, &ci) in c.iter().enumerate() {
        let d = sd.diag_vals.get(i).copied().unwrap_or(kk);
        let vc = r.val(ci);
        if vc < d {
            note(vc);
        } else if i < cols && d < kk {
            y[i] = r.shift_down(ci, d).expect("checked divisibility");
        }
    }
    if let Some(o) = obstruction {
        return LinearSolution::Unsolvable { obstruction_val: o };
    }
    let particular = sd.v.apply(&y);
    let mut kernel = Vec::new();
    for j in 0..cols {
        let d = sd.diag_vals.get(j).copied().unwrap_or(kk);
        let valuation = kk - d.min(kk);
        if valuation < kk {
            kernel.push(KernelGen { vector: sd.v.column(j), valuation });
        }
    }
    LinearSolution::Solved { particular, kernel }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::RingSpec;

    #[test]
    fn identity_system() {
        let r = RingSpec::zp(5, 3).unwrap();
        let sol = solve_linear(&UMatrix::identity(r, 3), &[7, 0, 124]);
        assert_eq!(sol.particular().unwrap(), &[7, 0, 124]);
    }

    #[test]
    fn scalar_systems_mod_8() {
        let r = RingSpec::zp(2, 3).unwrap();
        let a = UMatrix::from_ints(r, 1, &[2]);
        match solve_linear(&a, &[4]) {
            LinearSolution::Solved { particular, kernel } => {
                assert_eq!(particular, vec![2]);
                assert_eq!(kernel.len(), 1);
                assert_eq!(kernel[0].valuation, 2);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(solve_linear(&a, &[1]), LinearSolution::Unsolvable { obstruction_val: 0 }));
    }

    #[test]
    fn reconstruction_rectangular() {
        let r = RingSpec::zp(3, 4).unwrap();
        let a = UMatrix::from_codes(r, 2, 3, vec![3, 6, 9, 27, 1, 0]).unwrap();
        let sd = smith_local(&a);
        assert_eq!(sd.u.mul(&a).unwrap().mul(&sd.v).unwrap(), sd.diagonal());
        assert_eq!(sd.diag_vals, vec![0, 1]);
    }
}
