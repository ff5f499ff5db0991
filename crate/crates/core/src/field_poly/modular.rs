use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A prime modulus `2 <= p < 2^31`.
///
/// Residues are kept in `u64`; every product of two residues fits without
/// widening, and the 128-bit path is only used by [`PrimeModulus::mul`] for
/// symmetry with callers that pass unreduced operands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct PrimeModulus(u64);

impl PrimeModulus {
    pub const MAX: u64 = 1 << 31;

    pub fn new(p: u64) -> Result<Self> {
        if p >= Self::MAX || !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(PrimeModulus(p))
    }

    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn reduce_i64(self, v: i64) -> u64 {
        v.rem_euclid(self.0 as i64) as u64
    }

    #[inline]
    pub fn add(self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.0 {
            s - self.0
        } else {
            s
        }
    }

    #[inline]
    pub fn mul(self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.0 as u128) as u64
    }

    pub fn pow(self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.0;
        base %= self.0;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse of a nonzero residue.
    pub fn inv(self, a: u64) -> u64 {
        debug_assert!(a % self.0 != 0);
        self.pow(a, self.0 - 2)
    }
}

impl From<PrimeModulus> for u64 {
    fn from(p: PrimeModulus) -> u64 {
        p.0
    }
}

impl TryFrom<u64> for PrimeModulus {
    type Error = Error;
    fn try_from(p: u64) -> Result<Self> {
        PrimeModulus::new(p)
    }
}

impl std::fmt::Display for PrimeModulus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn mulmod(a: u64, b: u64, n: u64) -> u64 {
    ((a as u128 * b as u128) % n as u128) as u64
}

fn powmod(mut a: u64, mut e: u64, n: u64) -> u64 {
    let mut r = 1u64;
    a %= n;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a, n);
        }
        a = mulmod(a, a, n);
        e >>= 1;
    }
    r
}

/// Deterministic Miller–Rabin; the base set {2, 3, 5, 7} is exact below 3.2e9.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13] {
        if n % q == 0 {
            return n == q;
        }
    }
    if n >= 3_215_031_751 {
        return is_prime_slow(n);
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn is_prime_slow(n: u64) -> bool {
    let mut q = 3u64;
    while q * q <= n {
        if n % q == 0 {
            return false;
        }
        q += 2;
    }
    true
}

/// All primes in `[lo, hi]`.
pub fn primes_in(lo: u64, hi: u64) -> Vec<u64> {
    (lo..=hi).filter(|&n| is_prime(n)).collect()
}
