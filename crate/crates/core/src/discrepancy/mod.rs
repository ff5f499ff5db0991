//! Extreme discrepancy of finite point sets on `T_n`, the Koksma–Szüsz bound
//! shape, and the discrepancy of the fractional-part points of a polynomial
//! system over a region.

mod exact;
mod points;
mod sampled;

use serde::{Deserialize, Serialize};

pub use exact::{extreme_discrepancy_exact, ExactDiscrepancy, EXACT_GUARD_2D, EXACT_GUARD_3D};
pub use points::{DiscBox, Endpoint, FractionalPointSet, Interval};
pub use sampled::sampled_discrepancy_lower_bound;

use crate::expsum::{admissible_l, max_exp_sum, region_table};
use crate::field_poly::{degree2_independent, PolySystem, PrimeModulus};
use crate::region::Region;
use crate::{Error, Result};

/// `1/L + (log L)^n S* / N` (implied constant 1).
pub fn ks_bound(s_star: f64, l: u64, n_points: u64, n: usize) -> f64 {
    1.0 / l as f64 + (l as f64).ln().powi(n as i32) / n_points as f64 * s_star
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscOptions {
    /// Scan box for `S*`; defaults to `(p-1)/2`, lowered to fit the scan guard.
    pub l: Option<u64>,
    /// Also compute the sampled lower bound when the exact value is known.
    pub always_sample: bool,
    pub trials: u64,
    pub seed: u64,
}

impl Default for DiscOptions {
    fn default() -> Self {
        DiscOptions {
            l: None,
            always_sample: false,
            trials: 10_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub p: u64,
    pub system_hash: String,
    pub region: String,
    #[serde(rename = "N")]
    pub n_points: u64,
    #[serde(rename = "exact_D")]
    pub exact_d: Option<f64>,
    #[serde(rename = "sampled_D")]
    pub sampled_d: Option<f64>,
    #[serde(rename = "S_star")]
    pub s_star: f64,
    #[serde(rename = "L")]
    pub l: u64,
    pub ks_bound: f64,
    pub thm1_ratio: f64,
    pub thm2_ratio: f64,
    pub measure: f64,
    pub witness: Option<DiscBox>,
}

impl DiscrepancyReport {
    /// Exact discrepancy when available, else the sampled lower bound.
    pub fn d(&self) -> f64 {
        self.exact_d.or(self.sampled_d).unwrap_or(f64::NAN)
    }
}

/// `D(Ω)` for the points `(G_1(x)/p, …, G_n(x)/p)`, `x/p ∈ Ω`, with the
/// Koksma–Szüsz shape and the two theorem ratios
/// `D μ p^{1/2} / (log p)^{n+2}` and `D μ^{1/m} p^{1/2} / (log p)^{n+2}`.
pub fn discrepancy_of_system(
    system: &PolySystem,
    p: PrimeModulus,
    region: &Region,
    opts: &DiscOptions,
) -> Result<DiscrepancyReport> {
    let ind = degree2_independent(system, p);
    if !ind.independent {
        return Err(Error::DependentSystem {
            witness: ind.witness.unwrap_or_default(),
        });
    }
    let table = region_table(system, p, region)?;
    let pts = FractionalPointSet::from_table(&table);
    let n = system.n();
    let (exact_d, witness, sampled_d) = match extreme_discrepancy_exact(&pts) {
        Ok(e) => {
            let s = opts
                .always_sample
                .then(|| sampled_discrepancy_lower_bound(&pts, opts.trials, opts.seed));
            (Some(e.value), e.witness, s)
        }
        Err(Error::Guard { .. }) => (
            None,
            None,
            Some(sampled_discrepancy_lower_bound(&pts, opts.trials, opts.seed)),
        ),
        Err(e) => return Err(e),
    };
    let l = admissible_l(n, opts.l.unwrap_or((p.get() - 1) / 2), p.get());
    let s_star = if pts.is_empty() {
        0.0
    } else {
        max_exp_sum(&table, l)?.s_star
    };
    let ks = if pts.is_empty() {
        1.0 / l as f64
    } else {
        ks_bound(s_star, l, pts.len(), n)
    };
    let d = exact_d.or(sampled_d).unwrap_or(1.0);
    let mu = region.measure();
    let pf = p.get() as f64;
    let scale = pf.sqrt() / pf.ln().powi(n as i32 + 2);
    Ok(DiscrepancyReport {
        p: p.get(),
        system_hash: system.hash_hex(),
        region: region.label(),
        n_points: pts.len(),
        exact_d,
        sampled_d,
        s_star,
        l,
        ks_bound: ks,
        thm1_ratio: d * mu * scale,
        thm2_ratio: d * mu.powf(1.0 / region.m() as f64) * scale,
        measure: mu,
        witness,
    })
}
