use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fixed::ONE;
use crate::{Error, Result};

/// Grid anchor `γ ∈ T_m`, each coordinate a fixed-point value `g / 2^63`.
///
/// The anchor stands in for a point with irrational coordinates: what the
/// construction needs is that no rational `x/p` lies on a face of an anchored
/// cube, i.e. that no coordinate is a rational with denominator dividing
/// `2^level · p`. That property is checked exactly.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Anchor {
    gamma: Vec<u64>,
}

impl Anchor {
    pub fn new(gamma: Vec<u64>) -> Result<Self> {
        if gamma.iter().any(|&g| g >= ONE) {
            return Err(Error::InvalidRegion("anchor coordinates must lie in [0, 1)".into()));
        }
        Ok(Anchor { gamma })
    }

    pub fn m(&self) -> usize {
        self.gamma.len()
    }

    /// Raw fixed-point coordinates.
    pub fn coords(&self) -> &[u64] {
        &self.gamma
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.gamma.iter().map(|&g| g as f64 / ONE as f64).collect()
    }

    /// True iff no coordinate is a fraction `t/d` for any `d` in
    /// `denominators`.
    pub fn avoids(&self, denominators: &[u64]) -> bool {
        self.gamma
            .iter()
            .all(|&g| coordinate_avoids(g, denominators))
    }
}

/// `g / 2^63 = t / d` for an integer `t` iff `2^63` divides `g·d`.
pub(crate) fn coordinate_avoids(g: u64, denominators: &[u64]) -> bool {
    denominators
        .iter()
        .all(|&d| (g as u128 * d as u128) % ONE as u128 != 0)
}

/// Denominators whose rationals an anchor must avoid so that no point `x/p`
/// meets a face of a cube of side `2^-i`, `i <= max_level`. Since every
/// smaller denominator divides `2^max_level · p`, that single value suffices.
pub fn boundary_denominators(p: u64, max_level: u32) -> Vec<u64> {
    vec![(1u64 << max_level) * p.max(1)]
}

/// Deterministic anchor from `seed`; coordinates hitting a forbidden rational
/// are redrawn from the same stream.
pub fn draw_anchor(m: usize, seed: u64, forbidden_denominators: &[u64]) -> Anchor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = (0..m)
        .map(|_| loop {
            let g = rng.gen::<u64>() >> 1;
            if coordinate_avoids(g, forbidden_denominators) {
                break g;
            }
        })
        .collect();
    Anchor { gamma }
}
