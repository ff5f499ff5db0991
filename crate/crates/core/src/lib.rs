//! Numerical laboratory for the equidistribution of polynomial values modulo a
//! prime `p` when the arguments range over a region of the torus, and for the
//! distribution of zeros of polynomial congruence systems in such regions.
//!
//! The crate is organised bottom-up:
//!
//! * [`field_poly`]: sparse multivariate polynomials over `Z` and `F_p`,
//!   evaluation, and the degree-2 independence test.
//! * [`region`]: torus regions (balls, boxes, polytopes, complements) with
//!   membership, measure, shell measures and certified cube containment.
//! * [`dyadic`]: anchored dyadic grids and the layered cube cover of a region.
//! * [`expsum`]: exponential sums over cubes and regions.
//! * [`discrepancy`]: exact and sampled extreme discrepancy, the Koksma–Szüsz
//!   shape, and the end-to-end discrepancy of fractional-part point sets.
//! * [`variety`]: brute-force solution sets of congruence systems and the
//!   residual checks built on them.
//! * [`harness`]: configuration-driven experiments, result files and baselines.

pub mod discrepancy;
pub mod cache;
pub mod dyadic;
pub mod error;
pub mod expsum;
pub mod field_poly;
pub mod fixed;
pub mod harness;
pub mod region;
pub mod stats;
pub mod variety;

pub use error::{Error, Result};

/// Hard cap on grid scans (`p^m`) and lattice enumerations.
pub const LATTICE_GUARD: u128 = 1_000_000_000;
