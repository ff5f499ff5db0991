//! Binary fixed-point coordinates on `[0, 1]` with denominator `2^63`.
//!
//! Region parameters and anchored-cube corners live on this grid so that all
//! cube geometry is exact integer arithmetic.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const FRAC_BITS: u32 = 63;
/// The fixed-point representation of 1.
pub const ONE: u64 = 1 << FRAC_BITS;
pub const HALF: u64 = 1 << (FRAC_BITS - 1);

/// A number `v / 2^63` with `0 <= v <= 2^63`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Fx(u64);

impl Fx {
    pub const ZERO: Fx = Fx(0);
    pub const ONE: Fx = Fx(ONE);

    pub fn from_raw(v: u64) -> Result<Fx> {
        if v > ONE {
            return Err(Error::InvalidRegion(format!("fixed-point value {v} exceeds 1")));
        }
        Ok(Fx(v))
    }

    #[inline]
    pub fn raw(self) -> u64 {
        self.0
    }

    /// Nearest grid value to `x` in `[0, 1]`.
    pub fn from_f64(x: f64) -> Result<Fx> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::InvalidRegion(format!("coordinate {x} outside [0, 1]")));
        }
        Ok(Fx(((x * ONE as f64).round() as u64).min(ONE)))
    }

    /// Parses a decimal string such as `0.3` or `1`, rounding to the nearest
    /// multiple of `2^-63` (ties up).
    pub fn parse(s: &str) -> Result<Fx> {
        let s = s.trim();
        let bad = || Error::InvalidRegion(format!("`{s}` is not a decimal in [0, 1]"));
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if (int.is_empty() && frac.is_empty())
            || !int.bytes().all(|b| b.is_ascii_digit())
            || !frac.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(bad());
        }
        let frac = frac.trim_end_matches('0');
        if frac.len() > 19 {
            return Err(bad());
        }
        let int: u128 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let den = 10u128.pow(frac.len() as u32);
        let num: u128 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        let total = int.checked_mul(den).and_then(|v| v.checked_add(num)).ok_or_else(bad)?;
        if total > den {
            return Err(bad());
        }
        let raw = (total * ONE as u128 + den / 2) / den;
        Ok(Fx(raw as u64))
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.0 as f64 / ONE as f64
    }
}

impl std::fmt::Display for Fx {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

/// Circular distance between two raw coordinates taken mod 1 (as `u128`
/// values that may exceed `ONE`).
#[inline]
pub(crate) fn circ_dist(a: u128, b: u128) -> u128 {
    let one = ONE as u128;
    let d = (a % one + one - b % one) % one;
    d.min(one - d)
}
