//! Exact norm values `p^{-v}`.

use std::cmp::Ordering;
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The value `p^{-v}`. A saturated value means "at most `p^{-K}`", i.e. zero
/// at the working precision; in that case `v` holds `K`.
#[derive(Clone, Copy, Debug)]
pub struct NormValue {
    p: u64,
    v: Ratio<u64>,
    saturated: bool,
}

impl NormValue {
    /// Norm of an element of valuation `v` at precision `k`.
    pub fn from_val(p: u64, v: u32, k: u32) -> Self {
        if v >= k {
            Self::saturated(p, k)
        } else {
            NormValue { p, v: Ratio::from_integer(v as u64), saturated: false }
        }
    }

    pub fn saturated(p: u64, k: u32) -> Self {
        NormValue { p, v: Ratio::from_integer(k as u64), saturated: true }
    }

    pub fn one(p: u64) -> Self {
        NormValue { p, v: Ratio::from_integer(0), saturated: false }
    }

    pub fn rational(p: u64, num: u64, den: u64) -> Self {
        NormValue { p, v: Ratio::new(num, den), saturated: false }
    }

    pub fn p(&self) -> u64 {
        self.p
    }
    pub fn exponent(&self) -> Ratio<u64> {
        self.v
    }
    pub fn is_saturated(&self) -> bool {
        self.saturated
    }

    /// Integer exponent, if the exponent is an integer.
    pub fn val(&self) -> Option<u32> {
        self.v.is_integer().then(|| *self.v.numer() as u32)
    }

    /// `self < 1`.
    pub fn is_small(&self) -> bool {
        self.saturated || *self.v.numer() > 0
    }

    pub fn min(self, o: Self) -> Self {
        if self <= o {
            self
        } else {
            o
        }
    }
    pub fn max(self, o: Self) -> Self {
        if self >= o {
            self
        } else {
            o
        }
    }
}

impl PartialEq for NormValue {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for NormValue {}

impl PartialOrd for NormValue {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for NormValue {
    /// Orders by size of the norm: larger exponent means smaller norm.
    fn cmp(&self, o: &Self) -> Ordering {
        match (self.saturated, o.saturated) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            (false, false) => o.v.cmp(&self.v),
        }
    }
}

impl fmt::Display for NormValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.saturated {
            write!(f, "<= {}^-{} (saturated)", self.p, self.v)
        } else if *self.v.numer() == 0 {
            write!(f, "1")
        } else {
            write!(f, "{}^-{}", self.p, self.v)
        }
    }
}

#[derive(Serialize, Deserialize)]
struct NormRepr {
    p: u64,
    exponent: String,
    saturated: bool,
}

impl Serialize for NormValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        NormRepr { p: self.p, exponent: self.v.to_string(), saturated: self.saturated }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for NormValue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = NormRepr::deserialize(d)?;
        let v = parse_ratio(&r.exponent).map_err(serde::de::Error::custom)?;
        Ok(NormValue { p: r.p, v, saturated: r.saturated })
    }
}

fn parse_ratio(s: &str) -> Result<Ratio<u64>> {
    let bad = || Error::Parse(format!("bad exponent {s:?}"));
    match s.split_once('/') {
        Some((a, b)) => {
            let (a, b): (u64, u64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
            if b == 0 {
                return Err(bad());
            }
            Ok(Ratio::new(a, b))
        }
        None => Ok(Ratio::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering() {
        let a = NormValue::from_val(2, 1, 8);
        let b = NormValue::from_val(2, 3, 8);
        let z = NormValue::saturated(2, 8);
        assert!(b < a);
        assert!(z < b);
        assert!(NormValue::rational(3, 1, 2) > NormValue::from_val(3, 1, 6));
        assert_eq!(NormValue::from_val(2, 9, 8), z);
    }

    #[test]
    fn serde_roundtrip() {
        let n = NormValue::rational(3, 1, 6);
        let s = serde_json::to_string(&n).unwrap();
        let back: NormValue = serde_json::from_str(&s).unwrap();
        assert_eq!(back, n);
        assert_eq!(back.exponent(), Ratio::new(1, 6));
    }
}
