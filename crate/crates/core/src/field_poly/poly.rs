use std::cmp::Reverse;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PrimeModulus;
use crate::{Error, Result};

/// Largest total degree accepted for a monomial.
pub const DEGREE_CAP: u32 = 16;
/// Largest number of stored terms in one polynomial.
pub const TERM_CAP: usize = 10_000;

/// Exponent vector of a monomial in `m` variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Result<Self> {
        let mono = Monomial(exponents);
        let degree = mono.degree();
        if degree > DEGREE_CAP {
            return Err(Error::DegreeCap {
                degree,
                cap: DEGREE_CAP,
            });
        }
        Ok(mono)
    }

    pub fn one(m: usize) -> Self {
        Monomial(vec![0; m])
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }
}

/// Sparse multivariate polynomial.
///
/// Coefficients are integers when `modulus` is `None` and residues in
/// `[0, p)` otherwise. No stored coefficient is zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MvPolynomial {
    m: usize,
    modulus: Option<PrimeModulus>,
    terms: BTreeMap<Monomial, i64>,
}

impl MvPolynomial {
    pub fn zero(m: usize) -> Self {
        MvPolynomial {
            m,
            modulus: None,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(m: usize, c: i64) -> Self {
        let mut poly = Self::zero(m);
        if c != 0 {
            poly.terms.insert(Monomial::one(m), c);
        }
        poly
    }

    /// Integer polynomial from `(coefficient, exponents)` pairs; like terms are
    /// merged and zero sums dropped.
    pub fn from_terms<I>(m: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, Vec<u32>)>,
    {
        let mut poly = Self::zero(m);
        for (c, exps) in terms {
            if exps.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: exps.len(),
                });
            }
            let mono = Monomial::new(exps)?;
            let entry = poly.terms.entry(mono).or_insert(0);
            *entry = entry
                .checked_add(c)
                .ok_or_else(|| Error::Parse("coefficient overflow".into()))?;
        }
        poly.terms.retain(|_, c| *c != 0);
        if poly.terms.len() > TERM_CAP {
            return Err(Error::TermCap {
                count: poly.terms.len(),
                cap: TERM_CAP,
            });
        }
        Ok(poly)
    }

    pub fn num_vars(&self) -> usize {
        self.m
    }

    pub fn modulus(&self) -> Option<PrimeModulus> {
        self.modulus
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, i64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn coefficient(&self, exps: &[u32]) -> i64 {
        self.terms
            .iter()
            .find(|(m, _)| m.exponents() == exps)
            .map(|(_, &c)| c)
            .unwrap_or(0)
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    /// Coefficients reduced into `[0, p)` with vanishing terms removed.
    pub fn reduce_mod(&self, p: PrimeModulus) -> MvPolynomial {
        let terms = self
            .terms
            .iter()
            .filter_map(|(mono, &c)| {
                let r = p.reduce_i64(c);
                (r != 0).then(|| (mono.clone(), r as i64))
            })
            .collect();
        MvPolynomial {
            m: self.m,
            modulus: Some(p),
            terms,
        }
    }

    /// Value at `point` reduced mod `p`.
    pub fn eval(&self, point: &[u64], p: PrimeModulus) -> Result<u64> {
        if point.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: point.len(),
            });
        }
        let mut acc = 0u64;
        for (mono, &c) in &self.terms {
            let mut t = p.reduce_i64(c);
            for (&x, &e) in point.iter().zip(mono.exponents()) {
                if e > 0 {
                    t = p.mul(t, p.pow(x, e as u64));
                }
            }
            acc = p.add(acc, t);
        }
        Ok(acc)
    }

    fn display_order(&self) -> Vec<(&Monomial, i64)> {
        let mut terms: Vec<_> = self.terms().collect();
        terms.sort_by_key(|(m, _)| (Reverse(m.degree()), Reverse(m.exponents().to_vec())));
        terms
    }
}

impl fmt::Display for MvPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (mono, c)) in self.display_order().into_iter().enumerate() {
            let (sign, mag) = if c < 0 { ("-", c.unsigned_abs()) } else { ("+", c as u64) };
            match (i, sign) {
                (0, "-") => write!(f, "-")?,
                (0, _) => {}
                _ => write!(f, " {sign} ")?,
            }
            let factors: Vec<String> = mono
                .exponents()
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(j, &e)| {
                    if e == 1 {
                        format!("X{}", j + 1)
                    } else {
                        format!("X{}^{}", j + 1, e)
                    }
                })
                .collect();
            if factors.is_empty() {
                write!(f, "{mag}")?;
            } else if mag == 1 {
                write!(f, "{}", factors.join("*"))?;
            } else {
                write!(f, "{mag}*{}", factors.join("*"))?;
            }
        }
        Ok(())
    }
}

/// Whether a system's values are studied (`G`, over `F_p`) or its zeros
/// (`F`, over `Z`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Value,
    Zero,
}

/// `n >= 1` polynomials in the same `m` variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolySystem {
    m: usize,
    kind: SystemKind,
    polys: Vec<MvPolynomial>,
}

impl PolySystem {
    pub fn new(kind: SystemKind, polys: Vec<MvPolynomial>) -> Result<Self> {
        let first = polys
            .first()
            .ok_or_else(|| Error::InvalidSystem("a system needs at least one polynomial".into()))?;
        let m = first.num_vars();
        if let Some(bad) = polys.iter().find(|q| q.num_vars() != m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: bad.num_vars(),
            });
        }
        if kind == SystemKind::Zero && m < polys.len() + 1 {
            return Err(Error::InvalidSystem(format!(
                "zero-systems need m >= n + 1 (m = {m}, n = {})",
                polys.len()
            )));
        }
        Ok(PolySystem { m, kind, polys })
    }

    /// Parses `;`-separated polynomials. `m` defaults to the largest variable
    /// index that occurs (at least 1).
    pub fn parse(text: &str, kind: SystemKind, m: Option<usize>) -> Result<Self> {
        let pieces: Vec<&str> = text.split(';').filter(|s| !s.trim().is_empty()).collect();
        let m = match m {
            Some(m) => m,
            None => pieces
                .iter()
                .map(|s| super::parse::max_variable(s))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .max()
                .unwrap_or(0)
                .max(1),
        };
        let polys = pieces
            .iter()
            .map(|s| super::parse::parse_poly(s, m))
            .collect::<Result<Vec<_>>>()?;
        Self::new(kind, polys)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.polys.len()
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn polys(&self) -> &[MvPolynomial] {
        &self.polys
    }

    /// Stable identifier: SHA-256 over the canonical text, kind and `m`.
    pub fn hash_hex(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("{:?};m={};", self.kind, self.m));
        h.update(self.to_string());
        hex::encode(h.finalize())
    }

    /// Values of all polynomials at `point`, mod `p`.
    pub fn eval(&self, point: &[u64], p: PrimeModulus) -> Result<Vec<u64>> {
        self.polys.iter().map(|g| g.eval(point, p)).collect()
    }

    pub fn compile(&self, p: PrimeModulus) -> CompiledSystem {
        CompiledSystem::new(self, p)
    }
}

impl fmt::Display for PolySystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.polys.iter().map(|q| q.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// `Σ a_j G_j` with coefficients reduced mod `p` and zero terms dropped.
pub fn linear_combination(system: &PolySystem, a: &[u64], p: PrimeModulus) -> Result<MvPolynomial> {
    if a.len() != system.n() {
        return Err(Error::DimensionMismatch {
            expected: system.n(),
            got: a.len(),
        });
    }
    let mut acc: BTreeMap<Monomial, u64> = BTreeMap::new();
    for (g, &aj) in system.polys().iter().zip(a) {
        let aj = aj % p.get();
        if aj == 0 {
            continue;
        }
        for (mono, c) in g.terms() {
            let e = acc.entry(mono.clone()).or_insert(0);
            *e = p.add(*e, p.mul(aj, p.reduce_i64(c)));
        }
    }
    Ok(MvPolynomial {
        m: system.m(),
        modulus: Some(p),
        terms: acc
            .into_iter()
            .filter(|&(_, c)| c != 0)
            .map(|(m, c)| (m, c as i64))
            .collect(),
    })
}

#[derive(Clone, Debug)]
struct CompiledTerm {
    coef: u64,
    factors: Vec<(usize, usize)>,
}

/// A system reduced mod `p` and laid out for repeated evaluation: each point
/// builds a small table of coordinate powers, then every term is a product of
/// table lookups.
#[derive(Clone, Debug)]
pub struct CompiledSystem {
    p: PrimeModulus,
    m: usize,
    max_exp: usize,
    polys: Vec<Vec<CompiledTerm>>,
}

impl CompiledSystem {
    fn new(system: &PolySystem, p: PrimeModulus) -> Self {
        let mut max_exp = 0usize;
        let polys = system
            .polys()
            .iter()
            .map(|g| {
                g.reduce_mod(p)
                    .terms()
                    .map(|(mono, c)| {
                        let factors: Vec<(usize, usize)> = mono
                            .exponents()
                            .iter()
                            .enumerate()
                            .filter(|(_, &e)| e > 0)
                            .map(|(j, &e)| (j, e as usize))
                            .collect();
                        max_exp = max_exp.max(factors.iter().map(|f| f.1).max().unwrap_or(0));
                        CompiledTerm {
                            coef: c as u64,
                            factors,
                        }
                    })
                    .collect()
            })
            .collect();
        CompiledSystem {
            p,
            m: system.m(),
            max_exp,
            polys,
        }
    }

    pub fn modulus(&self) -> PrimeModulus {
        self.p
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.polys.len()
    }

    /// Scratch buffer sized for [`CompiledSystem::eval_into`].
    pub fn scratch(&self) -> Vec<u64> {
        vec![0; self.m * (self.max_exp + 1)]
    }

    fn fill_powers(&self, point: &[u64], pw: &mut [u64]) {
        let stride = self.max_exp + 1;
        for (j, &x) in point.iter().enumerate() {
            let row = &mut pw[j * stride..(j + 1) * stride];
            row[0] = 1;
            let x = x % self.p.get();
            for e in 1..stride {
                row[e] = self.p.mul(row[e - 1], x);
            }
        }
    }

    fn eval_poly(&self, terms: &[CompiledTerm], pw: &[u64]) -> u64 {
        let stride = self.max_exp + 1;
        let mut acc = 0u64;
        for t in terms {
            let mut v = t.coef;
            for &(j, e) in &t.factors {
                v = self.p.mul(v, pw[j * stride + e]);
            }
            acc = self.p.add(acc, v);
        }
        acc
    }

    /// Writes all `n` values at `point` into `out`.
    pub fn eval_into(&self, point: &[u64], scratch: &mut [u64], out: &mut [u64]) {
        self.fill_powers(point, scratch);
        for (o, terms) in out.iter_mut().zip(&self.polys) {
            *o = self.eval_poly(terms, scratch);
        }
    }

    /// True iff every polynomial vanishes at `point`; stops at the first
    /// nonzero value.
    pub fn all_vanish(&self, point: &[u64], scratch: &mut [u64]) -> bool {
        self.fill_powers(point, scratch);
        self.polys.iter().all(|terms| self.eval_poly(terms, scratch) == 0)
    }
}
