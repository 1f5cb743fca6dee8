//! Run configuration and resource caps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ring::RingSpec;

/// Environment variable holding cap overrides, e.g.
/// `closure=5000,enumeration=65536`.
pub const CAPS_ENV: &str = "ULTRASTAB_CAPS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    /// Largest finite image group generated by closure.
    pub closure: u64,
    /// Largest set enumerated by an exhaustive oracle.
    pub enumeration: u64,
    /// Largest matrix dimension built by a witness.
    pub matrix_dim: u64,
    /// Largest wreath index.
    pub wreath_index: u32,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { closure: 1_000_000, enumeration: 1 << 24, matrix_dim: 128, wreath_index: 4 }
    }
}

impl Caps {
    /// Apply `key=value` pairs separated by commas.
    pub fn apply_overrides(mut self, spec: &str) -> Result<Self> {
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, val) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("cap override {item:?} is not key=value")))?;
            let v: u64 = val.trim().parse().map_err(|_| Error::Parse(format!("cap {key} has bad value {val:?}")))?;
            if v == 0 {
                return Err(Error::Parse(format!("cap {key} must be positive")));
            }
            match key.trim() {
                "closure" => self.closure = v,
                "enumeration" => self.enumeration = v,
                "matrix_dim" | "matrix-dim" => self.matrix_dim = v,
                "wreath_index" | "wreath-index" => {
                    self.wreath_index = u32::try_from(v).map_err(|_| Error::Parse("wreath index too large".into()))?
                }
                other => return Err(Error::Parse(format!("unknown cap {other:?}"))),
            }
        }
        Ok(self)
    }

    /// Defaults overridden by [`CAPS_ENV`] when set.
    pub fn from_env() -> Result<Self> {
        match std::env::var(CAPS_ENV) {
            Ok(s) => Caps::default().apply_overrides(&s),
            Err(_) => Ok(Caps::default()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub ring: Option<RingSpec>,
    pub caps: Caps,
    pub seed: u64,
    pub output: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { ring: None, caps: Caps::default(), seed: 0, output: None }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides() {
        let c = Caps::default().apply_overrides("closure=10, wreath_index=2").unwrap();
        assert_eq!((c.closure, c.wreath_index, c.enumeration), (10, 2, 1 << 24));
        assert!(Caps::default().apply_overrides("closure=0").is_err());
        assert!(Caps::default().apply_overrides("bogus=3").is_err());
    }
}
