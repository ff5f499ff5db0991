use std::sync::Arc;

use serde::Serialize;

use super::Anchor;
use crate::fixed::ONE;
use crate::{Error, Result};

/// Largest grid level (cube side `2^-MAX_LEVEL`).
pub const MAX_LEVEL: u32 = 30;

/// The closed cube `Π_j [γ_j + u_j/k, γ_j + (u_j+1)/k]` (mod 1) with
/// `k = 2^level`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct AnchoredCube {
    #[serde(skip)]
    anchor: Arc<Anchor>,
    level: u32,
    coords: Vec<u64>,
}

impl AnchoredCube {
    pub fn new(anchor: Arc<Anchor>, level: u32, coords: Vec<u64>) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(Error::InvalidRegion(format!("grid level {level} exceeds {MAX_LEVEL}")));
        }
        if coords.len() != anchor.m() {
            return Err(Error::DimensionMismatch {
                expected: anchor.m(),
                got: coords.len(),
            });
        }
        if coords.iter().any(|&u| u >> level != 0) {
            return Err(Error::InvalidRegion("cube index outside the grid".into()));
        }
        Ok(AnchoredCube {
            anchor,
            level,
            coords,
        })
    }

    pub(crate) fn new_unchecked(anchor: Arc<Anchor>, level: u32, coords: Vec<u64>) -> Self {
        AnchoredCube {
            anchor,
            level,
            coords,
        }
    }

    pub fn m(&self) -> usize {
        self.coords.len()
    }

    /// Binary logarithm of the grid size `k`.
    pub fn level(&self) -> u32 {
        self.level
    }

    /// Grid size `k`; the side is `1/k`.
    pub fn k(&self) -> u64 {
        1 << self.level
    }

    pub fn coords(&self) -> &[u64] {
        &self.coords
    }

    pub fn anchor(&self) -> &Arc<Anchor> {
        &self.anchor
    }

    pub fn side(&self) -> f64 {
        1.0 / self.k() as f64
    }

    /// Per coordinate, the lifted closed interval `[a, b]` in raw fixed point
    /// with `0 <= a < 2^63` and `b = a + 2^63/k` (so `b` may pass 1).
    pub fn intervals(&self) -> Vec<(u128, u128)> {
        let side = (ONE >> self.level) as u128;
        self.anchor
            .coords()
            .iter()
            .zip(&self.coords)
            .map(|(&g, &u)| {
                let a = (g as u128 + u as u128 * side) % ONE as u128;
                (a, a + side)
            })
            .collect()
    }

    /// The enclosing cube one level up.
    pub fn parent(&self) -> Option<AnchoredCube> {
        (self.level > 0).then(|| AnchoredCube {
            anchor: self.anchor.clone(),
            level: self.level - 1,
            coords: self.coords.iter().map(|u| u >> 1).collect(),
        })
    }

    /// The `2^m` cubes one level down.
    pub fn children(&self) -> Vec<AnchoredCube> {
        let m = self.m();
        (0..1u64 << m)
            .map(|mask| AnchoredCube {
                anchor: self.anchor.clone(),
                level: self.level + 1,
                coords: (0..m)
                    .map(|j| self.coords[j] * 2 + (mask >> j & 1))
                    .collect(),
            })
            .collect()
    }

    /// Whether `other` is this cube or one of its descendants.
    pub fn contains_cube(&self, other: &AnchoredCube) -> bool {
        other.level >= self.level
            && self
                .coords
                .iter()
                .zip(&other.coords)
                .all(|(&u, &v)| v >> (other.level - self.level) == u)
    }

    /// Interiors are disjoint iff neither cube contains the other (same grid).
    pub fn interiors_disjoint(&self, other: &AnchoredCube) -> bool {
        !(self.contains_cube(other) || other.contains_cube(self))
    }

    /// Per coordinate, the residues `x mod p` with `x/p` in the closed
    /// interval (at most `p` of them).
    fn lattice_coordinates(&self, p: u64) -> Vec<Vec<u64>> {
        let one = ONE as u128;
        let p128 = p as u128;
        self.intervals()
            .into_iter()
            .map(|(a, b)| {
                let lo = (a * p128).div_ceil(one);
                let hi = b * p128 / one;
                let mut xs: Vec<u64> = (lo..=hi).map(|t| (t % p128) as u64).collect();
                xs.truncate(p as usize);
                xs
            })
            .collect()
    }

    /// Number of lattice points `x ∈ {0..p-1}^m` with `x/p` in the cube.
    pub fn lattice_count(&self, p: u64) -> u64 {
        self.lattice_coordinates(p)
            .iter()
            .map(|xs| xs.len() as u64)
            .product()
    }

    /// Lattice points of `p·cube`, in lexicographic order of the lifted
    /// coordinates.
    pub fn lattice_points(&self, p: u64) -> Vec<Vec<u64>> {
        let axes = self.lattice_coordinates(p);
        let mut out = vec![Vec::new()];
        for xs in &axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    xs.iter().map(move |&x| {
                        let mut v = prefix.clone();
                        v.push(x);
                        v
                    })
                })
                .collect();
        }
        out
    }

    /// Exact membership of `x/p`.
    pub fn contains_lattice_point(&self, x: &[u64], p: u64) -> bool {
        let one = ONE as u128;
        let p128 = p as u128;
        self.intervals().iter().zip(x).all(|(&(a, b), &xj)| {
            let t = (xj % p) as u128 * one;
            let (lo, hi) = (a * p128, b * p128);
            (lo <= t && t <= hi) || (lo <= t + p128 * one && t + p128 * one <= hi)
        })
    }

    /// Whether `x/p` lies on a face of the cube (exact).
    pub fn touches_lattice_point(&self, x: &[u64], p: u64) -> bool {
        let one = ONE as u128;
        let p128 = p as u128;
        self.intervals().iter().zip(x).any(|(&(a, b), &xj)| {
            let t = (xj % p) as u128 * one;
            [a * p128, b * p128]
                .iter()
                .any(|&e| e % (p128 * one) == t)
        })
    }
}

/// Index of the level-`level` grid cube whose interior contains `x/p`,
/// computed exactly. Requires that `x/p` is on no face (anchor property).
pub fn grid_index(anchor: &Anchor, level: u32, x: &[u64], p: u64) -> Vec<u64> {
    let one = ONE as u128;
    let p128 = p as u128;
    anchor
        .coords()
        .iter()
        .zip(x)
        .map(|(&g, &xj)| {
            let num = ((xj % p) as u128 * one + p128 * one - g as u128 * p128) % (p128 * one);
            ((num << level) / (p128 * one)) as u64
        })
        .collect()
}
