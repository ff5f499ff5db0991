//! Exponential sums `S(a) = Σ_x e(Σ_j a_j G_j(x) / p)` over cubes and regions,
//! the coefficient scan behind the Koksma–Szüsz bound and Fouvry–Katz ratios.

mod table;

use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use table::ValueTable;

use crate::dyadic::DyadicCover;
use crate::field_poly::{degree2_independent, CompiledSystem, PolySystem, PrimeModulus};
use crate::region::Region;
use crate::stats::pairwise_sum;
use crate::{error::guard, Error, Result, LATTICE_GUARD};

/// Largest coefficient scan `(2L+1)^n - 1`.
pub const SCAN_GUARD: u128 = 10_000_000;
/// Default `L` of the Fouvry–Katz scan.
pub const DEFAULT_L_SCAN: u64 = 10;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SumRange {
    /// `{u + t : 0 <= t_j <= w}` mod p.
    Cube { u: Vec<u64>, w: u64 },
    Region { label: String },
}

impl SumRange {
    fn key(&self) -> String {
        match self {
            SumRange::Cube { u, w } => format!("cube:{u:?}:{w}"),
            SumRange::Region { label } => format!("region:{label}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpSumResult {
    pub re: f64,
    pub im: f64,
    pub a: Vec<i64>,
    pub range: SumRange,
    pub p: u64,
    /// Number of summed points.
    pub points: u64,
}

impl ExpSumResult {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn abs(&self) -> f64 {
        self.value().norm()
    }
}

/// `cos(2πt/p)`, `sin(2πt/p)` for `t < p`.
#[derive(Clone, Debug)]
pub struct RootsOfUnity {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl RootsOfUnity {
    pub fn new(p: u64) -> Self {
        let (sin, cos) = (0..p).map(|t| (TAU * t as f64 / p as f64).sin_cos()).unzip();
        RootsOfUnity { cos, sin }
    }

    /// `Σ_t N_t e(t/p)` with pairwise summation.
    pub fn weighted_sum(&self, hist: &[u64]) -> Complex64 {
        let re: Vec<f64> = hist.iter().zip(&self.cos).map(|(&c, x)| c as f64 * x).collect();
        let im: Vec<f64> = hist.iter().zip(&self.sin).map(|(&c, x)| c as f64 * x).collect();
        Complex64::new(pairwise_sum(&re), pairwise_sum(&im))
    }
}

/// Histogram evaluator on a prebuilt table.
pub fn sum_from_table(table: &ValueTable, a: &[i64], roots: &RootsOfUnity) -> Complex64 {
    roots.weighted_sum(&table.histogram(a))
}

fn check_coeffs(system: &PolySystem, a: &[i64]) -> Result<()> {
    if a.len() != system.n() {
        return Err(Error::DimensionMismatch {
            expected: system.n(),
            got: a.len(),
        });
    }
    Ok(())
}

fn check_cube(system: &PolySystem, p: PrimeModulus, u: &[u64], w: u64) -> Result<()> {
    if u.len() != system.m() {
        return Err(Error::DimensionMismatch {
            expected: system.m(),
            got: u.len(),
        });
    }
    if w == 0 || w >= p.get() {
        return Err(Error::Config(format!("cube width must satisfy 1 <= w < p, got w = {w}")));
    }
    guard("cube points (w+1)^m", ((w + 1) as u128).saturating_pow(system.m() as u32), LATTICE_GUARD)
}

/// Table over a cube, through the on-disk cache when one is configured.
pub fn cube_table(system: &PolySystem, p: PrimeModulus, u: &[u64], w: u64) -> Result<ValueTable> {
    check_cube(system, p, u, w)?;
    let range = SumRange::Cube { u: u.to_vec(), w };
    ValueTable::cached(system, p.get(), &range.key(), || {
        Ok(ValueTable::for_cube(&system.compile(p), u, w))
    })
}

/// Table over the lattice points of `pΩ`, through the cache.
pub fn region_table(system: &PolySystem, p: PrimeModulus, region: &Region) -> Result<ValueTable> {
    if region.m() != system.m() {
        return Err(Error::DimensionMismatch {
            expected: system.m(),
            got: region.m(),
        });
    }
    let range = SumRange::Region {
        label: region.label(),
    };
    ValueTable::cached(system, p.get(), &range.key(), || {
        let pts = region.lattice_points(p.get())?;
        Ok(ValueTable::from_points(&system.compile(p), &pts))
    })
}

/// Exponential sum over a cube via the value histogram.
pub fn exp_sum_cube(system: &PolySystem, a: &[i64], p: PrimeModulus, u: &[u64], w: u64) -> Result<ExpSumResult> {
    check_coeffs(system, a)?;
    let table = cube_table(system, p, u, w)?;
    let s = sum_from_table(&table, a, &RootsOfUnity::new(p.get()));
    Ok(ExpSumResult {
        re: s.re,
        im: s.im,
        a: a.to_vec(),
        range: SumRange::Cube { u: u.to_vec(), w },
        p: p.get(),
        points: table.points(),
    })
}

fn naive_point_sum(sys: &CompiledSystem, a: &[u64], x: &[u64], scratch: &mut [u64], out: &mut [u64]) -> Complex64 {
    let p = sys.modulus();
    sys.eval_into(x, scratch, out);
    let t = a
        .iter()
        .zip(out.iter())
        .fold(0, |acc, (&aj, &g)| p.add(acc, p.mul(aj, g)));
    let (s, c) = (TAU * t as f64 / p.get() as f64).sin_cos();
    Complex64::new(c, s)
}

/// Direct evaluator: one complex exponential per point.
pub fn exp_sum_cube_naive(system: &PolySystem, a: &[i64], p: PrimeModulus, u: &[u64], w: u64) -> Result<ExpSumResult> {
    check_coeffs(system, a)?;
    check_cube(system, p, u, w)?;
    let sys = system.compile(p);
    let ar: Vec<u64> = a.iter().map(|&c| p.reduce_i64(c)).collect();
    let m = system.m();
    let side = w + 1;
    let mut scratch = sys.scratch();
    let mut out = vec![0u64; system.n()];
    let mut t = vec![0u64; m];
    let mut x: Vec<u64> = u.iter().map(|&v| v % p.get()).collect();
    let mut s = Complex64::new(0.0, 0.0);
    for _ in 0..side.pow(m as u32) {
        s += naive_point_sum(&sys, &ar, &x, &mut scratch, &mut out);
        for j in (0..m).rev() {
            t[j] += 1;
            if t[j] < side {
                x[j] = (u[j] + t[j]) % p.get();
                break;
            }
            t[j] = 0;
            x[j] = u[j] % p.get();
        }
    }
    Ok(ExpSumResult {
        re: s.re,
        im: s.im,
        a: a.to_vec(),
        range: SumRange::Cube { u: u.to_vec(), w },
        p: p.get(),
        points: side.pow(m as u32),
    })
}

/// Exponential sum over the lattice points `x` with `x/p ∈ Ω`.
pub fn exp_sum_region(system: &PolySystem, a: &[i64], p: PrimeModulus, region: &Region) -> Result<ExpSumResult> {
    check_coeffs(system, a)?;
    let table = region_table(system, p, region)?;
    let s = sum_from_table(&table, a, &RootsOfUnity::new(p.get()));
    Ok(ExpSumResult {
        re: s.re,
        im: s.im,
        a: a.to_vec(),
        range: SumRange::Region {
            label: region.label(),
        },
        p: p.get(),
        points: table.points(),
    })
}

/// The region sum split as `(Σ over cover cubes, remainder)`: the cubes are
/// summed one by one over their own lattice points, the remainder over the
/// region's lattice points that no cube contains.
pub fn exp_sum_region_split(
    system: &PolySystem,
    a: &[i64],
    p: PrimeModulus,
    region: &Region,
    cover: &DyadicCover,
) -> Result<(Complex64, Complex64)> {
    check_coeffs(system, a)?;
    let sys = system.compile(p);
    let roots = RootsOfUnity::new(p.get());
    let cubes: Vec<_> = cover.cubes().collect();
    let on_cubes = cubes
        .par_iter()
        .map(|c| sum_from_table(&ValueTable::from_points(&sys, &c.lattice_points(p.get())), a, &roots))
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    let rest: Vec<Vec<u64>> = region
        .lattice_points(p.get())?
        .into_iter()
        .filter(|x| cover.locate(x, p.get()).is_none())
        .collect();
    let remainder = sum_from_table(&ValueTable::from_points(&sys, &rest), a, &roots);
    Ok((on_cubes, remainder))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxExpSum {
    pub s_star: f64,
    /// Maximizer with its first nonzero coordinate positive; ties go to the
    /// lexicographically first vector.
    pub argmax: Vec<i64>,
    pub l: u64,
    /// Number of coefficient vectors evaluated (one per `±a` pair).
    pub scanned: u64,
}

/// Coefficient vectors of `[-L, L]^n \ {0}` with first nonzero coordinate
/// positive, in lexicographic order.
pub fn canonical_coefficients(n: usize, l: u64) -> Vec<Vec<i64>> {
    let l = l as i64;
    let mut out = Vec::new();
    let mut a = vec![-l; n];
    loop {
        if a.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0) {
            out.push(a.clone());
        }
        let mut j = n;
        loop {
            if j == 0 {
                return out;
            }
            j -= 1;
            a[j] += 1;
            if a[j] <= l {
                break;
            }
            a[j] = -l;
        }
    }
}

fn check_scan(n: usize, l: u64, p: u64) -> Result<()> {
    if l == 0 || l >= p {
        return Err(Error::Config(format!("scan box needs 1 <= L < p, got L = {l}")));
    }
    guard(
        "coefficient scan (2L+1)^n - 1",
        ((2 * l + 1) as u128).saturating_pow(n as u32) - 1,
        SCAN_GUARD,
    )
}

/// Largest admissible `L <= want` for which `(2L+1)^n - 1` fits the scan
/// guard (and `L < p`).
pub fn admissible_l(n: usize, want: u64, p: u64) -> u64 {
    let mut l = want.min(p.saturating_sub(1)).max(1);
    while l > 1 && ((2 * l + 1) as u128).saturating_pow(n as u32) - 1 > SCAN_GUARD {
        l -= 1;
    }
    l
}

/// `max |S(a)|` over nonzero `a ∈ [-L, L]^n`, using `S(-a) = conj S(a)` to
/// scan half the box.
pub fn max_exp_sum(table: &ValueTable, l: u64) -> Result<MaxExpSum> {
    check_scan(table.n(), l, table.p())?;
    let roots = RootsOfUnity::new(table.p());
    let coeffs = canonical_coefficients(table.n(), l);
    let best = coeffs
        .par_iter()
        .enumerate()
        .map(|(i, a)| (sum_from_table(table, a, &roots).norm(), i))
        .reduce(
            || (f64::NEG_INFINITY, usize::MAX),
            |x, y| if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) { y } else { x },
        );
    Ok(MaxExpSum {
        s_star: best.0,
        argmax: coeffs[best.1].clone(),
        l,
        scanned: coeffs.len() as u64,
    })
}

/// Writes one CSV row `a1..an,re,im,abs,ratio` per scanned vector, where
/// `ratio = abs / scale`.
pub fn write_scan_csv<W: Write>(table: &ValueTable, l: u64, scale: f64, mut w: W) -> Result<()> {
    check_scan(table.n(), l, table.p())?;
    let roots = RootsOfUnity::new(table.p());
    let head: Vec<String> = (1..=table.n()).map(|j| format!("a{j}")).collect();
    writeln!(w, "{},re,im,abs,ratio", head.join(","))?;
    for a in canonical_coefficients(table.n(), l) {
        let s = sum_from_table(table, &a, &roots);
        let cells: Vec<String> = a.iter().map(|c| c.to_string()).collect();
        writeln!(w, "{},{:e},{:e},{:e},{:e}", cells.join(","), s.re, s.im, s.norm(), s.norm() / scale)?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FkRatio {
    pub ratio: f64,
    pub s_star: f64,
    pub argmax: Vec<i64>,
    pub l_scan: u64,
}

/// `max_a |S(a)| / (p^{1/2} w^{m-1} log p)` over nonzero `|a_j| <= L_scan`
/// (clamped below `p`). Refuses systems that are not degree-2 independent.
pub fn fk_ratio(system: &PolySystem, p: PrimeModulus, u: &[u64], w: u64, l_scan: u64) -> Result<FkRatio> {
    let ind = degree2_independent(system, p);
    if !ind.independent {
        return Err(Error::DependentSystem {
            witness: ind.witness.unwrap_or_default(),
        });
    }
    let table = cube_table(system, p, u, w)?;
    let best = max_exp_sum(&table, admissible_l(system.n(), l_scan, p.get()))?;
    let pf = p.get() as f64;
    let scale = pf.sqrt() * (w as f64).powi(system.m() as i32 - 1) * pf.ln();
    Ok(FkRatio {
        ratio: best.s_star / scale,
        s_star: best.s_star,
        argmax: best.argmax,
        l_scan: best.l,
    })
}

#[cfg(test)]
mod tests;
