//! Matrices over a truncated local ring with the sup-norm.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norm::NormValue;
use crate::ring::RingSpec;

/// Row-major matrix over `o/p^K`. Square in almost all uses; rectangular
/// shapes only appear as linear systems.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UMatrix {
    ring: RingSpec,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl UMatrix {
    pub fn zeros(ring: RingSpec, rows: usize, cols: usize) -> Self {
        UMatrix { ring, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(ring: RingSpec, n: usize) -> Self {
        let mut m = Self::zeros(ring, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn from_codes(ring: RingSpec, rows: usize, cols: usize, data: Vec<u64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!("{} entries for a {rows}x{cols} matrix", data.len())));
        }
        for &x in &data {
            ring.check_code(x)?;
        }
        Ok(UMatrix { ring, rows, cols, data })
    }

    /// Square matrix from row-major integers, reduced into the ring.
    pub fn from_ints(ring: RingSpec, n: usize, ints: &[i64]) -> Self {
        assert_eq!(ints.len(), n * n, "from_ints: wrong entry count");
        UMatrix { ring, rows: n, cols: n, data: ints.iter().map(|&x| ring.from_int(x)).collect() }
    }

    pub fn diag(ring: RingSpec, codes: &[u64]) -> Self {
        let n = codes.len();
        let mut m = Self::zeros(ring, n, n);
        for (i, &c) in codes.iter().enumerate() {
            m.data[i * n + i] = c;
        }
        m
    }

    /// The elementary matrix `E_ij` (zero-based indices).
    pub fn unit(ring: RingSpec, n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(ring, n, n);
        m.data[i * n + j] = 1;
        m
    }

    pub fn ring(&self) -> RingSpec {
        self.ring
    }
    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    /// Dimension of a square matrix.
    pub fn n(&self) -> usize {
        debug_assert_eq!(self.rows, self.cols);
        self.rows
    }
    pub fn codes(&self) -> &[u64] {
        &self.data
    }
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }
    pub fn set(&mut self, i: usize, j: usize, x: u64) {
        self.data[i * self.cols + j] = x;
    }

    fn same_shape(&self, o: &UMatrix) -> Result<()> {
        self.ring.check_same(&o.ring)?;
        if self.rows != o.rows || self.cols != o.cols {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, o.rows, o.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, o: &UMatrix) -> Result<UMatrix> {
        self.same_shape(o)?;
        let r = self.ring;
        Ok(UMatrix { data: self.data.iter().zip(&o.data).map(|(&a, &b)| r.add(a, b)).collect(), ..*self })
    }

    pub fn sub(&self, o: &UMatrix) -> Result<UMatrix> {
        self.same_shape(o)?;
        let r = self.ring;
        Ok(UMatrix { data: self.data.iter().zip(&o.data).map(|(&a, &b)| r.sub(a, b)).collect(), ..*self })
    }

    pub fn neg(&self) -> UMatrix {
        let r = self.ring;
        UMatrix { data: self.data.iter().map(|&a| r.neg(a)).collect(), ..*self }
    }

    pub fn scale(&self, c: u64) -> UMatrix {
        let r = self.ring;
        UMatrix { data: self.data.iter().map(|&a| r.mul(a, c)).collect(), ..*self }
    }

    /// `ω̄^a · self`.
    pub fn shift_up(&self, a: u32) -> UMatrix {
        let r = self.ring;
        UMatrix { data: self.data.iter().map(|&x| r.shift_up(x, a)).collect(), ..*self }
    }

    pub fn mul(&self, o: &UMatrix) -> Result<UMatrix> {
        self.ring.check_same(&o.ring)?;
        if self.cols != o.rows {
            return Err(Error::ShapeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, o.rows, o.cols
            )));
        }
        let r = self.ring;
        let mut out = vec![0u64; self.rows * o.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0 {
                    continue;
                }
                for j in 0..o.cols {
                    let b = o.data[k * o.cols + j];
                    if b != 0 {
                        let t = &mut out[i * o.cols + j];
                        *t = r.add(*t, r.mul(a, b));
                    }
                }
            }
        }
        Ok(UMatrix { ring: r, rows: self.rows, cols: o.cols, data: out })
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[u64]) -> Vec<u64> {
        assert_eq!(v.len(), self.cols);
        let r = self.ring;
        (0..self.rows)
            .map(|i| (0..self.cols).fold(0, |acc, j| r.add(acc, r.mul(self.get(i, j), v[j]))))
            .collect()
    }

    pub fn pow(&self, mut e: u64) -> UMatrix {
        let mut base = self.clone();
        let mut acc = UMatrix::identity(self.ring, self.n());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base).expect("square");
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base).expect("square");
            }
        }
        acc
    }

    pub fn transpose(&self) -> UMatrix {
        let mut out = UMatrix::zeros(self.ring, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    /// Minimal entry valuation; `K` for the zero matrix.
    pub fn val(&self) -> u32 {
        self.data.iter().map(|&x| self.ring.val(x)).min().unwrap_or(self.ring.precision())
    }

    pub fn matnorm(&self) -> NormValue {
        NormValue::from_val(self.ring.p(), self.val(), self.ring.precision())
    }

    /// Valuation of `self - o`.
    pub fn dist_val(&self, o: &UMatrix) -> Result<u32> {
        Ok(self.sub(o)?.val())
    }

    pub fn dist(&self, o: &UMatrix) -> Result<NormValue> {
        Ok(self.sub(o)?.matnorm())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn is_identity(&self) -> bool {
        self.is_square() && *self == UMatrix::identity(self.ring, self.rows)
    }

    /// Determinant by elimination.
    pub fn det(&self) -> Result<u64> {
        if !self.is_square() {
            return Err(Error::ShapeMismatch("determinant of a non-square matrix".into()));
        }
        Ok(crate::smith::smith_local(self).det_a())
    }

    pub fn is_gl(&self) -> bool {
        self.is_square() && self.reduce(1).map_or(false, |m| unit_det_mod_p(&m))
    }

    /// Inverse by Gauss-Jordan elimination with unit pivots.
    pub fn inverse(&self) -> Result<UMatrix> {
        if !self.is_square() {
            return Err(Error::ShapeMismatch("inverse of a non-square matrix".into()));
        }
        let n = self.rows;
        let r = self.ring;
        let mut a = self.clone();
        let mut inv = UMatrix::identity(r, n);
        for c in 0..n {
            // Choose a unit pivot in column c.
            let piv = match (c..n).find(|&i| r.is_unit(a.get(i, c))) {
                Some(i) => i,
                None => return Err(Error::NonInvertible(self.det().map(|d| r.val(d)).unwrap_or(0))),
            };
            a.swap_rows(c, piv);
            inv.swap_rows(c, piv);
            let s = r.inv(a.get(c, c))?;
            a.scale_row(c, s);
            inv.scale_row(c, s);
            for i in 0..n {
                let f = a.get(i, c);
                if i != c && f != 0 {
                    a.add_row_multiple(i, c, r.neg(f));
                    inv.add_row_multiple(i, c, r.neg(f));
                }
            }
        }
        Ok(inv)
    }

    pub(crate) fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    pub(crate) fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.rows {
                self.data.swap(i * self.cols + a, i * self.cols + b);
            }
        }
    }

    pub(crate) fn scale_row(&mut self, i: usize, s: u64) {
        for j in 0..self.cols {
            let x = self.get(i, j);
            self.set(i, j, self.ring.mul(x, s));
        }
    }

    /// row_i += f * row_src
    pub(crate) fn add_row_multiple(&mut self, i: usize, src: usize, f: u64) {
        let r = self.ring;
        for j in 0..self.cols {
            let x = r.add(self.get(i, j), r.mul(f, self.get(src, j)));
            self.set(i, j, x);
        }
    }

    /// col_j += f * col_src
    pub(crate) fn add_col_multiple(&mut self, j: usize, src: usize, f: u64) {
        let r = self.ring;
        for i in 0..self.rows {
            let x = r.add(self.get(i, j), r.mul(f, self.get(i, src)));
            self.set(i, j, x);
        }
    }

    /// Reduction modulo `p^m` for `m ≤ K`.
    pub fn reduce(&self, m: u32) -> Result<UMatrix> {
        if m > self.ring.precision() {
            return Err(Error::PreconditionViolated(format!(
                "cannot reduce precision {} to {m}",
                self.ring.precision()
            )));
        }
        let r = self.ring.with_precision(m)?;
        Ok(UMatrix { ring: r, data: self.data.iter().map(|&x| self.ring.truncate(x, m)).collect(), ..*self })
    }

    /// Canonical lift of the entries to a ring of higher precision.
    pub fn lift_to(&self, ring: RingSpec) -> Result<UMatrix> {
        if ring.mode() != self.ring.mode()
            || ring.p() != self.ring.p()
            || ring.precision() < self.ring.precision()
        {
            return Err(Error::RingMismatch(self.ring.to_string(), ring.to_string()));
        }
        Ok(UMatrix { ring, ..self.clone() })
    }

    /// `M` with `self = I + ω̄^k M`; `M` lives at precision `K - k`.
    pub fn congruence_coords(&self, k: u32) -> Result<UMatrix> {
        let kk = self.ring.precision();
        if k == 0 || k >= kk {
            return Err(Error::PreconditionViolated(format!("congruence level {k} outside 1..{kk}")));
        }
        let d = self.sub(&UMatrix::identity(self.ring, self.n()))?;
        let actual = d.val();
        if actual < k {
            return Err(Error::NotInBall { level: k, actual });
        }
        let r = self.ring.with_precision(kk - k)?;
        let data = d.data.iter().map(|&x| self.ring.shift_down(x, k)).collect::<Result<Vec<_>>>()?;
        Ok(UMatrix { ring: r, data, ..d })
    }

    /// `I + ω̄^k M` in `ring`, where `M` is known modulo `p^{K-k}`.
    pub fn congruence_lift(m: &UMatrix, k: u32, ring: RingSpec) -> Result<UMatrix> {
        let lifted = UMatrix { ring, ..m.clone() };
        UMatrix::identity(ring, m.n()).add(&lifted.shift_up(k))
    }

    /// `P self P^{-1}`.
    pub fn conj(&self, p: &UMatrix) -> Result<UMatrix> {
        p.mul(self)?.mul(&p.inverse()?)
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> UMatrix {
        let mut out = UMatrix::zeros(self.ring, rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                out.set(i, j, self.get(r0 + i, c0 + j));
            }
        }
        out
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &UMatrix) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self.set(r0 + i, c0 + j, b.get(i, j));
            }
        }
    }

    pub fn block_diag(ring: RingSpec, blocks: &[UMatrix]) -> UMatrix {
        let n: usize = blocks.iter().map(|b| b.rows).sum();
        let m: usize = blocks.iter().map(|b| b.cols).sum();
        let mut out = UMatrix::zeros(ring, n, m);
        let (mut r, mut c) = (0, 0);
        for b in blocks {
            out.set_block(r, c, b);
            r += b.rows;
            c += b.cols;
        }
        out
    }

    pub fn column(&self, j: usize) -> Vec<u64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn encode_entries(&self) -> Vec<serde_json::Value> {
        self.data.iter().map(|&x| self.ring.encode(x)).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    ring: RingSpec,
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cols: Option<usize>,
    entries: Vec<serde_json::Value>,
}

impl UMatrix {
    /// Decode row-major scalar encodings.
    pub fn decode_entries(ring: RingSpec, rows: usize, cols: usize, entries: &[serde_json::Value]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!("{} entries for a {rows}x{cols} matrix", entries.len())));
        }
        let data = entries
            .iter()
            .enumerate()
            .map(|(i, v)| ring.decode(v).map_err(|e| Error::Parse(format!("entry {i}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        UMatrix::from_codes(ring, rows, cols, data)
    }
}

impl Serialize for UMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let cols = (self.rows != self.cols).then_some(self.cols);
        MatrixRepr { ring: self.ring, n: self.rows, cols, entries: self.encode_entries() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for UMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = MatrixRepr::deserialize(d)?;
        UMatrix::decode_entries(r.ring, r.n, r.cols.unwrap_or(r.n), &r.entries).map_err(serde::de::Error::custom)
    }
}

/// Unit determinant over the residue field, by elimination mod p.
fn unit_det_mod_p(m: &UMatrix) -> bool {
    let n = m.rows;
    let r = m.ring;
    let mut a = m.clone();
    for c in 0..n {
        let Some(piv) = (c..n).find(|&i| a.get(i, c) != 0) else {
            return false;
        };
        a.swap_rows(c, piv);
        let s = r.inv(a.get(c, c)).expect("field");
        for i in c + 1..n {
            let f = r.mul(a.get(i, c), s);
            if f != 0 {
                a.add_row_multiple(i, c, r.neg(f));
            }
        }
    }
    true
}

impl fmt::Display for UMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ", ")?;
            }
            let row: Vec<String> = (0..self.cols).map(|j| self.ring.format(self.get(i, j))).collect();
            write!(f, "[{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}
