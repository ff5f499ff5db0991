use serde::{Deserialize, Serialize};

use crate::expsum::ValueTable;
use crate::{Error, Result};

/// A multiset of points of `[0, 1)^n` whose coordinates are fractions
/// `c / denom`, stored as distinct numerator vectors (sorted) with
/// multiplicities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FractionalPointSet {
    n: usize,
    denom: u64,
    points: Vec<(Vec<u32>, u64)>,
    total: u64,
}

impl FractionalPointSet {
    pub fn new(n: usize, denom: u64, coords: &[Vec<u64>]) -> Result<Self> {
        if coords.iter().flatten().any(|&v| v >= denom) {
            return Err(Error::InvalidRegion("point coordinate outside [0, 1)".into()));
        }
        let pts = coords
            .iter()
            .map(|c| (c.iter().map(|&v| v as u32).collect(), 1))
            .collect();
        Self::weighted(n, denom, pts)
    }

    /// Points with explicit multiplicities; duplicates are merged.
    pub fn weighted(n: usize, denom: u64, mut points: Vec<(Vec<u32>, u64)>) -> Result<Self> {
        if n == 0 || denom == 0 || denom > u32::MAX as u64 {
            return Err(Error::InvalidRegion(format!("bad point set shape n={n}, denom={denom}")));
        }
        if let Some((bad, _)) = points.iter().find(|(c, _)| c.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: bad.len(),
            });
        }
        if points.iter().any(|(c, _)| c.iter().any(|&v| v as u64 >= denom)) {
            return Err(Error::InvalidRegion("point coordinate outside [0, 1)".into()));
        }
        points.retain(|p| p.1 > 0);
        points.sort_unstable();
        points.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        let total = points.iter().map(|p| p.1).sum();
        Ok(FractionalPointSet {
            n,
            denom,
            points,
            total,
        })
    }

    /// `(G_1(x)/p, …, G_n(x)/p)` for the points behind a value table.
    pub fn from_table(table: &ValueTable) -> Self {
        FractionalPointSet {
            n: table.n(),
            denom: table.p(),
            points: table.entries().to_vec(),
            total: table.points(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn denom(&self) -> u64 {
        self.denom
    }

    /// `N`, counted with multiplicity.
    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn distinct(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[(Vec<u32>, u64)] {
        &self.points
    }
}

/// End of an interval at `num / denom`; `plus` marks the one-sided limit from
/// above (`c⁺`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Endpoint {
    pub num: u64,
    pub plus: bool,
}

impl Endpoint {
    pub fn at(num: u64) -> Self {
        Endpoint { num, plus: false }
    }

    pub fn above(num: u64) -> Self {
        Endpoint { num, plus: true }
    }
}

/// `[lo, hi)` with limit endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Endpoint,
    pub hi: Endpoint,
}

impl Interval {
    pub fn contains(&self, c: u64) -> bool {
        let after_lo = c > self.lo.num || (c == self.lo.num && !self.lo.plus);
        let before_hi = c < self.hi.num || (c == self.hi.num && self.hi.plus);
        after_lo && before_hi
    }

    /// Length numerator (over the point set's denominator).
    pub fn len_num(&self) -> u64 {
        self.hi.num.saturating_sub(self.lo.num)
    }
}

/// A half-open axis box `Π [α_j, β_j)` without wrap-around, described on the
/// grid `1/denom`. Endpoints may be one-sided limits, in which case counts and
/// volume are those of the limiting boxes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscBox {
    pub denom: u64,
    pub intervals: Vec<Interval>,
}

impl DiscBox {
    pub fn volume(&self) -> f64 {
        self.intervals
            .iter()
            .map(|iv| iv.len_num() as f64 / self.denom as f64)
            .product()
    }

    pub fn bounds_f64(&self) -> Vec<(f64, f64)> {
        let q = self.denom as f64;
        self.intervals
            .iter()
            .map(|iv| (iv.lo.num as f64 / q, iv.hi.num as f64 / q))
            .collect()
    }

    /// `A(Ξ, Π)`, with multiplicity.
    pub fn count(&self, pts: &FractionalPointSet) -> u64 {
        pts.points()
            .iter()
            .filter(|(c, _)| self.intervals.iter().zip(c).all(|(iv, &v)| iv.contains(v as u64)))
            .map(|p| p.1)
            .sum()
    }

    /// `|A/N - λ|` as an exact fraction `(num, den)` when it fits in `i128`.
    pub fn deviation_exact(&self, pts: &FractionalPointSet) -> Option<(i128, i128)> {
        let q = self.denom as i128;
        let n = pts.len() as i128;
        let qn = q.checked_pow(self.intervals.len() as u32)?;
        let vol = self
            .intervals
            .iter()
            .try_fold(1i128, |acc, iv| acc.checked_mul(iv.len_num() as i128))?;
        let a = self.count(pts) as i128;
        let num = a.checked_mul(qn)?.checked_sub(n.checked_mul(vol)?)?;
        Some((num.abs(), n.checked_mul(qn)?))
    }

    pub fn deviation(&self, pts: &FractionalPointSet) -> f64 {
        match self.deviation_exact(pts) {
            Some((a, b)) => a as f64 / b as f64,
            None => (self.count(pts) as f64 / pts.len() as f64 - self.volume()).abs(),
        }
    }
}
