//! Truncated local rings `Z/p^K` and `F_p[X]/(X^K)`.
//!
//! Elements of both rings are stored as a single `u64` holding the base-`p`
//! digit string of the element. In mixed characteristic that is just the
//! least residue; in equal characteristic digit `i` is the coefficient of
//! `X^i`. Valuation, truncation and multiplication by the uniformizer are
//! therefore the same integer operations in both modes; only addition and
//! multiplication differ.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// `o = Z_p`, uniformizer `p`.
    #[serde(rename = "zp")]
    MixedChar,
    /// `o = F_p[[X]]`, uniformizer `X`.
    #[serde(rename = "fpx")]
    EqualChar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RingSpec {
    mode: Mode,
    p: u64,
    k: u32,
    modulus: u64,
}

#[derive(Serialize, Deserialize)]
struct RingRepr {
    mode: Mode,
    p: u64,
    precision: u32,
}

impl Serialize for RingSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RingRepr { mode: self.mode, p: self.p, precision: self.k }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RingSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = RingRepr::deserialize(d)?;
        RingSpec::new(r.mode, r.p, r.precision).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// `p`-adic valuation of a nonzero integer.
pub fn nu_p(p: u64, mut n: u64) -> u32 {
    assert!(n != 0, "nu_p of zero");
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

impl RingSpec {
    pub fn new(mode: Mode, p: u64, k: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidRing(format!("p = {p} is not prime")));
        }
        if k == 0 {
            return Err(Error::InvalidRing("precision must be at least 1".into()));
        }
        let mut modulus: u64 = 1;
        for _ in 0..k {
            modulus = modulus
                .checked_mul(p)
                .filter(|m| *m <= 1u64 << 62)
                .ok_or_else(|| Error::InvalidRing(format!("{p}^{k} does not fit in 62 bits")))?;
        }
        Ok(RingSpec { mode, p, k, modulus })
    }

    /// `Z/p^k`.
    pub fn zp(p: u64, k: u32) -> Result<Self> {
        Self::new(Mode::MixedChar, p, k)
    }

    /// `F_p[X]/(X^k)`.
    pub fn fpx(p: u64, k: u32) -> Result<Self> {
        Self::new(Mode::EqualChar, p, k)
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }
    pub fn p(&self) -> u64 {
        self.p
    }
    pub fn precision(&self) -> u32 {
        self.k
    }
    /// `p^K`, the number of elements.
    pub fn size(&self) -> u64 {
        self.modulus
    }

    /// Same ring at another precision.
    pub fn with_precision(&self, k: u32) -> Result<Self> {
        Self::new(self.mode, self.p, k)
    }

    pub fn check_same(&self, other: &RingSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::RingMismatch(self.to_string(), other.to_string()))
        }
    }

    /// `p^a` as an integer, saturating at `p^K` (which then reduces to 0).
    pub fn p_pow(&self, a: u32) -> u64 {
        if a >= self.k {
            self.modulus
        } else {
            self.p.pow(a)
        }
    }

    pub fn zero(&self) -> u64 {
        0
    }
    pub fn one(&self) -> u64 {
        1
    }

    /// The image of an integer under `Z -> o/p^K`.
    pub fn from_int(&self, n: i64) -> u64 {
        match self.mode {
            Mode::MixedChar => n.rem_euclid(self.modulus as i64) as u64,
            Mode::EqualChar => n.rem_euclid(self.p as i64) as u64,
        }
    }

    /// Element with the given low-degree-first digits (coefficients of `ω̄^i`).
    pub fn from_digits(&self, digits: &[u64]) -> Result<u64> {
        if digits.len() > self.k as usize {
            return Err(Error::Parse(format!("{} digits exceed precision {}", digits.len(), self.k)));
        }
        let mut x = 0u64;
        for &d in digits.iter().rev() {
            if d >= self.p {
                return Err(Error::Parse(format!("digit {d} out of range for p = {}", self.p)));
            }
            x = x * self.p + d;
        }
        Ok(x)
    }

    pub fn digits(&self, mut x: u64) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.k as usize);
        for _ in 0..self.k {
            out.push(x % self.p);
            x /= self.p;
        }
        out
    }

    /// Parse a code already known to be a canonical residue.
    pub fn check_code(&self, x: u64) -> Result<u64> {
        if x < self.modulus {
            Ok(x)
        } else {
            Err(Error::Parse(format!("{x} is not a canonical residue mod {}^{}", self.p, self.k)))
        }
    }

    pub fn add(&self, x: u64, y: u64) -> u64 {
        match self.mode {
            Mode::MixedChar => {
                let s = x + y;
                if s >= self.modulus {
                    s - self.modulus
                } else {
                    s
                }
            }
            Mode::EqualChar if self.p == 2 => x ^ y,
            Mode::EqualChar => self.digitwise(x, y, |a, b| (a + b) % self.p),
        }
    }

    pub fn neg(&self, x: u64) -> u64 {
        match self.mode {
            Mode::MixedChar => {
                if x == 0 {
                    0
                } else {
                    self.modulus - x
                }
            }
            Mode::EqualChar if self.p == 2 => x,
            Mode::EqualChar => self.digitwise(x, 0, |a, _| (self.p - a) % self.p),
        }
    }

    pub fn sub(&self, x: u64, y: u64) -> u64 {
        self.add(x, self.neg(y))
    }

    fn digitwise(&self, mut x: u64, mut y: u64, f: impl Fn(u64, u64) -> u64) -> u64 {
        let mut out = 0u64;
        let mut place = 1u64;
        for _ in 0..self.k {
            out += f(x % self.p, y % self.p) * place;
            x /= self.p;
            y /= self.p;
            place = place.wrapping_mul(self.p);
        }
        out
    }

    pub fn mul(&self, x: u64, y: u64) -> u64 {
        match self.mode {
            Mode::MixedChar if self.modulus <= 1 << 32 => x * y % self.modulus,
            Mode::MixedChar => ((x as u128 * y as u128) % self.modulus as u128) as u64,
            Mode::EqualChar if self.p == 2 => {
                let mut acc = 0u64;
                let mut a = x;
                let mut i = 0;
                while a != 0 {
                    if a & 1 == 1 {
                        acc ^= y << i;
                    }
                    a >>= 1;
                    i += 1;
                }
                acc & (self.modulus - 1)
            }
            Mode::EqualChar => {
                let a = self.digits(x);
                let b = self.digits(y);
                let k = self.k as usize;
                let mut c = vec![0u64; k];
                for i in 0..k {
                    if a[i] == 0 {
                        continue;
                    }
                    for j in 0..k - i {
                        c[i + j] = (c[i + j] + a[i] * b[j]) % self.p;
                    }
                }
                self.from_digits(&c).expect("digits in range")
            }
        }
    }

    pub fn pow(&self, x: u64, mut e: u64) -> u64 {
        let mut base = x;
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Largest `v ≤ K` with `ω̄^v | x`.
    pub fn val(&self, mut x: u64) -> u32 {
        if x == 0 {
            return self.k;
        }
        let mut v = 0;
        while x % self.p == 0 {
            x /= self.p;
            v += 1;
        }
        v
    }

    pub fn is_unit(&self, x: u64) -> bool {
        x % self.p != 0
    }

    pub fn inv(&self, x: u64) -> Result<u64> {
        if !self.is_unit(x) {
            return Err(Error::NonUnit(self.val(x)));
        }
        match self.mode {
            Mode::MixedChar => {
                let (mut r0, mut r1) = (self.modulus as i128, x as i128);
                let (mut t0, mut t1) = (0i128, 1i128);
                while r1 != 0 {
                    let q = r0 / r1;
                    (r0, r1) = (r1, r0 - q * r1);
                    (t0, t1) = (t1, t0 - q * t1);
                }
                Ok(t0.rem_euclid(self.modulus as i128) as u64)
            }
            Mode::EqualChar => {
                let a = self.digits(x);
                let p = self.p;
                let a0_inv = (1..p).find(|b| (a[0] * b) % p == 1).expect("residue field inverse");
                let k = self.k as usize;
                let mut b = vec![0u64; k];
                b[0] = a0_inv;
                for m in 1..k {
                    let mut s = 0u64;
                    for i in 1..=m {
                        s = (s + a[i] * b[m - i]) % p;
                    }
                    b[m] = ((p - s) % p) * a0_inv % p;
                }
                self.from_digits(&b)
            }
        }
    }

    /// `ω̄^a · x`.
    pub fn shift_up(&self, x: u64, a: u32) -> u64 {
        if a >= self.k {
            return 0;
        }
        ((x as u128 * self.p.pow(a) as u128) % self.modulus as u128) as u64
    }

    /// `x / ω̄^a`, returned as the canonical representative modulo `p^{K-a}`.
    pub fn shift_down(&self, x: u64, a: u32) -> Result<u64> {
        if self.val(x) < a {
            return Err(Error::NotInBall { level: a, actual: self.val(x) });
        }
        if a >= self.k {
            return Ok(0);
        }
        Ok(x / self.p.pow(a))
    }

    /// Reduction to precision `m ≤ K`.
    pub fn truncate(&self, x: u64, m: u32) -> u64 {
        if m >= self.k {
            x
        } else {
            x % self.p.pow(m)
        }
    }

    /// Canonical decimal string (mixed) or coefficient array (equal).
    pub fn encode(&self, x: u64) -> serde_json::Value {
        match self.mode {
            Mode::MixedChar => serde_json::Value::String(x.to_string()),
            Mode::EqualChar => {
                let d = self.digits(x);
                let last = d.iter().rposition(|&c| c != 0).map_or(0, |i| i + 1);
                serde_json::Value::Array(d[..last].iter().map(|&c| c.into()).collect())
            }
        }
    }

    pub fn decode(&self, v: &serde_json::Value) -> Result<u64> {
        match (self.mode, v) {
            (Mode::MixedChar, serde_json::Value::String(s)) => {
                let n: u64 = s.trim().parse().map_err(|_| Error::Parse(format!("bad integer {s:?}")))?;
                self.check_code(n)
            }
            (Mode::MixedChar, serde_json::Value::Number(n)) => {
                let n = n.as_u64().ok_or_else(|| Error::Parse(format!("bad integer {n}")))?;
                self.check_code(n)
            }
            (Mode::EqualChar, serde_json::Value::Array(a)) => {
                let digits = a
                    .iter()
                    .map(|c| c.as_u64().ok_or_else(|| Error::Parse(format!("bad coefficient {c}"))))
                    .collect::<Result<Vec<_>>>()?;
                self.from_digits(&digits)
            }
            _ => Err(Error::Parse(format!("scalar {v} does not match ring {self}"))),
        }
    }

    pub fn format(&self, x: u64) -> String {
        match self.mode {
            Mode::MixedChar => x.to_string(),
            Mode::EqualChar => {
                let terms: Vec<String> = self
                    .digits(x)
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| c != 0)
                    .map(|(i, &c)| match (i, c) {
                        (0, c) => c.to_string(),
                        (1, 1) => "X".into(),
                        (1, c) => format!("{c}X"),
                        (i, 1) => format!("X^{i}"),
                        (i, c) => format!("{c}X^{i}"),
                    })
                    .collect();
                if terms.is_empty() {
                    "0".into()
                } else {
                    terms.join("+")
                }
            }
        }
    }
}

impl fmt::Display for RingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mode {
            Mode::MixedChar => write!(f, "Z/{}^{}", self.p, self.k),
            Mode::EqualChar => write!(f, "F_{}[X]/(X^{})", self.p, self.k),
        }
    }
}

/// A ring element together with its ring.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Scalar {
    ring: RingSpec,
    code: u64,
}

impl Scalar {
    pub fn new(ring: RingSpec, code: u64) -> Result<Self> {
        Ok(Scalar { ring, code: ring.check_code(code)? })
    }
    pub fn from_int(ring: RingSpec, n: i64) -> Self {
        Scalar { ring, code: ring.from_int(n) }
    }
    pub fn from_digits(ring: RingSpec, digits: &[u64]) -> Result<Self> {
        Ok(Scalar { ring, code: ring.from_digits(digits)? })
    }
    pub fn ring(&self) -> RingSpec {
        self.ring
    }
    pub fn code(&self) -> u64 {
        self.code
    }
    pub fn add(&self, o: &Scalar) -> Result<Scalar> {
        self.ring.check_same(&o.ring)?;
        Ok(Scalar { ring: self.ring, code: self.ring.add(self.code, o.code) })
    }
    pub fn sub(&self, o: &Scalar) -> Result<Scalar> {
        self.ring.check_same(&o.ring)?;
        Ok(Scalar { ring: self.ring, code: self.ring.sub(self.code, o.code) })
    }
    pub fn mul(&self, o: &Scalar) -> Result<Scalar> {
        self.ring.check_same(&o.ring)?;
        Ok(Scalar { ring: self.ring, code: self.ring.mul(self.code, o.code) })
    }
    pub fn neg(&self) -> Scalar {
        Scalar { ring: self.ring, code: self.ring.neg(self.code) }
    }
    pub fn pow(&self, e: u64) -> Scalar {
        Scalar { ring: self.ring, code: self.ring.pow(self.code, e) }
    }
    pub fn val(&self) -> u32 {
        self.ring.val(self.code)
    }
    pub fn inv(&self) -> Result<Scalar> {
        Ok(Scalar { ring: self.ring, code: self.ring.inv(self.code)? })
    }
    pub fn norm(&self) -> crate::norm::NormValue {
        crate::norm::NormValue::from_val(self.ring.p(), self.val(), self.ring.precision())
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.ring.format(self.code))
    }
}
