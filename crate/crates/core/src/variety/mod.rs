//! Zero sets `X_p` of congruence systems by exhaustive search, their counts in
//! regions and the residuals against the Lang–Weil count, Fouvry's cube count
//! and the region count for very well shaped regions.

mod cache;

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{grid_index, Anchor, AnchoredCube};
use crate::field_poly::{PolySystem, PrimeModulus, SystemKind};
use crate::region::Region;
use crate::{error::guard, Error, Result, LATTICE_GUARD};

/// Residual magnitude above which a prime is flagged as a suspected bad
/// reduction.
pub const BAD_REDUCTION_THRESHOLD: f64 = 10.0;

/// `X_p`: the solutions `x ∈ {0..p-1}^m` of `F_j(x) ≡ 0 (mod p)` for all `j`,
/// sorted lexicographically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolutionSet {
    p: u64,
    m: usize,
    n: usize,
    system_hash: String,
    flat: Vec<u32>,
    nu: Option<u32>,
}

/// Enumerates `X_p`, reading and writing the on-disk cache when one is
/// configured.
pub fn solve_system(system: &PolySystem, p: PrimeModulus) -> Result<SolutionSet> {
    if system.kind() != SystemKind::Zero {
        return Err(Error::InvalidSystem("solution sets need a zero-system".into()));
    }
    let m = system.m();
    guard("solution scan p^m", (p.get() as u128).saturating_pow(m as u32), LATTICE_GUARD)?;
    let hash = system.hash_hex();
    if let Some(flat) = cache::load(&hash, p.get(), m, system.n()) {
        return Ok(SolutionSet {
            p: p.get(),
            m,
            n: system.n(),
            system_hash: hash,
            flat,
            nu: None,
        });
    }
    let flat = scan(system, p);
    cache::store(&hash, p.get(), m, system.n(), &flat)?;
    Ok(SolutionSet {
        p: p.get(),
        m,
        n: system.n(),
        system_hash: hash,
        flat,
        nu: None,
    })
}

fn scan(system: &PolySystem, p: PrimeModulus) -> Vec<u32> {
    let sys = system.compile(p);
    let m = system.m();
    let pv = p.get();
    let rows: Vec<Vec<u32>> = (0..pv)
        .into_par_iter()
        .map(|x0| {
            let mut out = Vec::new();
            let mut scratch = sys.scratch();
            let mut x = vec![0u64; m];
            x[0] = x0;
            for _ in 0..pv.pow(m as u32 - 1) {
                if sys.all_vanish(&x, &mut scratch) {
                    out.extend(x.iter().map(|&v| v as u32));
                }
                for j in (1..m).rev() {
                    x[j] += 1;
                    if x[j] < pv {
                        break;
                    }
                    x[j] = 0;
                }
            }
            out
        })
        .collect();
    rows.concat()
}

impl SolutionSet {
    /// Attaches the number `ν >= 1` of top-dimensional absolutely irreducible
    /// components (supplied by the experimenter).
    pub fn with_nu(mut self, nu: u32) -> Result<Self> {
        if nu == 0 {
            return Err(Error::Config("nu must be at least 1".into()));
        }
        self.nu = Some(nu);
        Ok(self)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nu(&self) -> Option<u32> {
        self.nu
    }

    pub fn system_hash(&self) -> &str {
        &self.system_hash
    }

    /// `#X_p`.
    pub fn len(&self) -> u64 {
        (self.flat.len() / self.m) as u64
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u32]> {
        self.flat.chunks(self.m)
    }

    pub fn to_vecs(&self) -> Vec<Vec<u64>> {
        self.iter().map(|x| x.iter().map(|&v| v as u64).collect()).collect()
    }
}

/// `T_p(Ω) = #{x ∈ X_p : x/p ∈ Ω}`.
pub fn count_in_region(sol: &SolutionSet, region: &Region) -> Result<u64> {
    if region.m() != sol.m {
        return Err(Error::DimensionMismatch {
            expected: sol.m,
            got: region.m(),
        });
    }
    let inv = 1.0 / sol.p as f64;
    Ok(sol
        .flat
        .par_chunks(sol.m)
        .filter(|x| {
            let u: Vec<f64> = x.iter().map(|&v| v as f64 * inv).collect();
            region.contains_point(&u)
        })
        .count() as u64)
}

/// `(#X_p - ν p^{m-n}) / p^{m-n-1/2}`.
pub fn lang_weil_residual(sol: &SolutionSet) -> Result<f64> {
    let nu = sol
        .nu
        .ok_or_else(|| Error::Config("nu is required for the Lang-Weil residual".into()))?;
    let p = sol.p as f64;
    let d = (sol.m - sol.n) as f64;
    Ok((sol.len() as f64 - nu as f64 * p.powf(d)) / p.powf(d - 0.5))
}

/// Denominator of the cube residual:
/// `p^{(m-n)/2} (log p)^m + k^{-(m-n-1)} p^{m-n-1/2} (log p)^{n+1}`.
fn fouvry_scale(sol: &SolutionSet, k: u64) -> f64 {
    let p = sol.p as f64;
    let (m, n) = (sol.m as f64, sol.n as f64);
    let lp = p.ln();
    p.powf((m - n) / 2.0) * lp.powf(m) + (k as f64).powf(-(m - n - 1.0)) * p.powf(m - n - 0.5) * lp.powf(n + 1.0)
}

/// `(T_p(Γ) - #X_p k^{-m}) / scale` for a grid cube `Γ` of side `1/k`.
pub fn fouvry_cube_residual(sol: &SolutionSet, cube: &AnchoredCube) -> f64 {
    let k = cube.k();
    let t = sol
        .iter()
        .filter(|x| {
            let x: Vec<u64> = x.iter().map(|&v| v as u64).collect();
            cube.contains_lattice_point(&x, sol.p)
        })
        .count() as f64;
    (t - sol.len() as f64 * (k as f64).powi(-(sol.m as i32))) / fouvry_scale(sol, k)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeResidual {
    pub coords: Vec<u64>,
    pub count: u64,
    pub residual: f64,
}

/// Residuals for all `k^m` cubes of the anchored grid of side `1/k`
/// (`k = 2^level`), in lexicographic order of the cube index. The anchor must
/// keep lattice points off cube faces.
pub fn fouvry_grid_residuals(sol: &SolutionSet, anchor: &Arc<Anchor>, level: u32) -> Result<Vec<CubeResidual>> {
    let k = 1u64 << level;
    let m = sol.m;
    guard("grid cubes k^m", (k as u128).saturating_pow(m as u32), LATTICE_GUARD)?;
    if !anchor.avoids(&crate::dyadic::boundary_denominators(sol.p, level)) {
        return Err(Error::InvalidRegion("anchor puts lattice points on cube faces".into()));
    }
    let mut counts: HashMap<Vec<u64>, u64> = HashMap::new();
    for x in sol.iter() {
        let x: Vec<u64> = x.iter().map(|&v| v as u64).collect();
        *counts.entry(grid_index(anchor, level, &x, sol.p)).or_default() += 1;
    }
    let expect = sol.len() as f64 * (k as f64).powi(-(m as i32));
    let scale = fouvry_scale(sol, k);
    let mut out = Vec::with_capacity(k.pow(m as u32) as usize);
    let mut u = vec![0u64; m];
    for _ in 0..k.pow(m as u32) {
        let count = counts.get(&u).copied().unwrap_or(0);
        out.push(CubeResidual {
            coords: u.clone(),
            count,
            residual: (count as f64 - expect) / scale,
        });
        for j in (0..m).rev() {
            u[j] += 1;
            if u[j] < k {
                break;
            }
            u[j] = 0;
        }
    }
    Ok(out)
}

/// `(T_p(Ω)/#X_p - μ) / (μ^{1-1/m} p^{-1/(2(n+1))} log p + p^{-1/2} (log p)^{n+2})`
/// for very well shaped regions.
pub fn theorem3_residual(sol: &SolutionSet, region: &Region) -> Result<f64> {
    if !region.is_very_well_shaped() {
        return Err(Error::InvalidRegion(format!(
            "{} is not a very well shaped region kind",
            region.kind_name()
        )));
    }
    if sol.is_empty() {
        return Err(Error::EmptySolutionSet);
    }
    let t = count_in_region(sol, region)? as f64;
    Ok(theorem3_residual_from_count(sol, t as u64, region.measure()))
}

/// The theorem-3 residual from a known count `T_p(Ω)` and measure `μ`.
pub fn theorem3_residual_from_count(sol: &SolutionSet, t: u64, mu: f64) -> f64 {
    let p = sol.p as f64;
    let (m, n) = (sol.m as f64, sol.n as f64);
    let lp = p.ln();
    let scale = mu.powf(1.0 - 1.0 / m) * p.powf(-1.0 / (2.0 * (n + 1.0))) * lp + p.powf(-0.5) * lp.powf(n + 2.0);
    (t as f64 / sol.len() as f64 - mu) / scale
}

pub fn suspected_bad_reduction(residual: f64) -> bool {
    residual.abs() > BAD_REDUCTION_THRESHOLD
}
