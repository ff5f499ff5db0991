//! Multivariate polynomials over `Z` and `F_p`.

mod independence;
mod modular;
mod parse;
mod poly;

pub use independence::{degree2_independent, Independence};
pub use modular::{is_prime, primes_in, PrimeModulus};
pub use parse::parse_poly;
pub use poly::{
    linear_combination, CompiledSystem, Monomial, MvPolynomial, PolySystem, SystemKind, DEGREE_CAP,
    TERM_CAP,
};
