use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::config::{ExperimentKind, Plan};
use crate::cache::write_atomic;
use crate::discrepancy::{discrepancy_of_system, DiscOptions};
use crate::dyadic::{boundary_denominators, build_cover, cover_diagnostics, draw_anchor, DepthPolicy, MAX_LEVEL};
use crate::expsum::{admissible_l, fk_ratio, max_exp_sum, region_table, DEFAULT_L_SCAN};
use crate::field_poly::PrimeModulus;
use crate::region::Region;
use crate::variety::{
    count_in_region, fouvry_grid_residuals, lang_weil_residual, solve_system, suspected_bad_reduction,
    theorem3_residual_from_count, SolutionSet,
};
use crate::Result;

pub type Fields = BTreeMap<String, Value>;

/// One `(system, p, region)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub key: String,
    pub system_hash: String,
    pub p: u64,
    pub region: String,
    /// Set when the cell could not be computed; `fields` is then empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub fields: Fields,
}

/// The deterministic payload of a run. Timing lives in [`RunOutcome`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub version: String,
    pub config_hash: String,
    pub kind: ExperimentKind,
    pub seed: u64,
    pub warnings: Vec<String>,
    pub cells: Vec<CellResult>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub result: ExperimentResult,
    pub wall_clock_s: f64,
}

impl ExperimentResult {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| crate::Error::Config(format!("result file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn cell(&self, key: &str) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.key == key)
    }

    /// Scalar fields as CSV, one row per cell, columns sorted by name.
    /// Arrays are joined with `;`.
    pub fn to_csv(&self) -> String {
        let mut cols: Vec<&str> = self
            .cells
            .iter()
            .flat_map(|c| c.fields.keys().map(String::as_str))
            .collect();
        cols.sort_unstable();
        cols.dedup();
        let mut out = String::from("key,p,region");
        for c in &cols {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for cell in &self.cells {
            out.push_str(&format!("{},{},{}", csv_escape(&cell.key), cell.p, csv_escape(&cell.region)));
            for c in &cols {
                out.push(',');
                if let Some(v) = cell.fields.get(*c) {
                    out.push_str(&csv_escape(&csv_value(v)));
                }
            }
            out.push('\n');
        }
        out
    }
}

fn csv_value(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Array(a) => a.iter().map(csv_value).collect::<Vec<_>>().join(";"),
        other => other.to_string(),
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Cell key: short system hash, prime and region label.
pub fn cell_key(system_hash: &str, p: u64, region: &str) -> String {
    format!("{}|p={}|{}", &system_hash[..12.min(system_hash.len())], p, region)
}

/// Region labels, with `#k` appended to repeats so keys stay unique.
fn region_labels(regions: &[Region]) -> Vec<String> {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    regions
        .iter()
        .map(|r| {
            let l = r.label();
            let k = seen.entry(l.clone()).or_insert(0);
            *k += 1;
            if *k == 1 {
                l
            } else {
                format!("{l}#{k}")
            }
        })
        .collect()
}

/// Seed of one cell, a function of its own coordinates only, so removing a
/// cell leaves the others unchanged.
fn cell_seed(seed: u64, key: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(key.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

/// Runs every cell of a validated plan.
pub fn run(plan: &Plan) -> RunOutcome {
    let start = Instant::now();
    let hash = plan.system.hash_hex();
    let labels = region_labels(&plan.regions);
    let work: Vec<(PrimeModulus, &Region, &str)> = plan
        .primes
        .iter()
        .flat_map(|&p| plan.regions.iter().zip(&labels).map(move |(r, l)| (p, r, l.as_str())))
        .collect();
    // solutions are shared by all regions of a prime
    let solutions: BTreeMap<u64, std::result::Result<SolutionSet, String>> = if plan.config.kind == ExperimentKind::Variety {
        plan.primes
            .par_iter()
            .map(|&p| {
                let s = solve_system(&plan.system, p)
                    .and_then(|s| s.with_nu(plan.config.nu.unwrap_or(1)))
                    .map_err(|e| e.to_string());
                (p.get(), s)
            })
            .collect()
    } else {
        BTreeMap::new()
    };
    let cells = work
        .par_iter()
        .map(|&(p, region, label)| {
            let label = label.to_string();
            let key = cell_key(&hash, p.get(), &label);
            let seed = cell_seed(plan.seed, &key);
            let computed = match plan.config.kind {
                ExperimentKind::Discrepancy => disc_fields(plan, p, region, seed),
                ExperimentKind::Sweep => disc_fields(plan, p, region, seed).and_then(|mut f| {
                    f.append(&mut cover_fields(plan, p, region, seed)?);
                    Ok(f)
                }),
                ExperimentKind::Expsum => expsum_fields(plan, p, region, seed),
                ExperimentKind::Cover => cover_fields(plan, p, region, seed),
                ExperimentKind::Variety => match &solutions[&p.get()] {
                    Ok(sol) => variety_fields(plan, sol, region, seed),
                    Err(e) => Err(crate::Error::Config(e.clone())),
                },
            };
            let (fields, error) = match computed {
                Ok(f) => (f, None),
                Err(e) => (Fields::new(), Some(e.to_string())),
            };
            CellResult {
                key,
                system_hash: hash.clone(),
                p: p.get(),
                region: label,
                error,
                fields,
            }
        })
        .collect();
    RunOutcome {
        result: ExperimentResult {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: plan.config.hash_hex(),
            kind: plan.config.kind,
            seed: plan.seed,
            warnings: plan.warnings.clone(),
            cells,
        },
        wall_clock_s: start.elapsed().as_secs_f64(),
    }
}

fn disc_fields(plan: &Plan, p: PrimeModulus, region: &Region, seed: u64) -> Result<Fields> {
    let opts = DiscOptions {
        l: plan.config.l,
        always_sample: false,
        trials: plan.config.trials.unwrap_or(10_000),
        seed,
    };
    let report = discrepancy_of_system(&plan.system, p, region, &opts)?;
    let Value::Object(map) = serde_json::to_value(&report)? else {
        unreachable!()
    };
    Ok(map
        .into_iter()
        .filter(|(k, _)| !matches!(k.as_str(), "p" | "system_hash" | "region" | "witness"))
        .collect())
}

fn cover_fields(plan: &Plan, p: PrimeModulus, region: &Region, seed: u64) -> Result<Fields> {
    let policy = plan.config.depth.unwrap_or(DepthPolicy::Thm2);
    let depth = policy.depth(p.get(), plan.system.n());
    let anchor = Arc::new(draw_anchor(
        region.m(),
        seed,
        &boundary_denominators(p.get(), MAX_LEVEL),
    ));
    let cover = build_cover(region, depth, &anchor)?;
    let diag = cover_diagnostics(&cover, region);
    let mut f = Fields::new();
    f.insert("cover_depth".into(), json!(depth));
    f.insert("cover_layer_counts".into(), json!(cover.layer_counts()));
    f.insert("cover_union_measure".into(), json!(diag.union_measure));
    f.insert("cover_deficiency".into(), json!(diag.deficiency));
    f.insert("cover_max_ratio_ws".into(), json!(diag.max_ratio_ws()));
    f.insert("cover_max_ratio_vws".into(), json!(diag.max_ratio_vws()));
    Ok(f)
}

fn expsum_fields(plan: &Plan, p: PrimeModulus, region: &Region, seed: u64) -> Result<Fields> {
    let pv = p.get();
    let n = plan.system.n();
    let mut f = Fields::new();
    let table = region_table(&plan.system, p, region)?;
    let l = admissible_l(n, plan.config.l.unwrap_or((pv - 1) / 2), pv);
    let max = max_exp_sum(&table, l)?;
    f.insert("N".into(), json!(table.points()));
    f.insert("L".into(), json!(max.l));
    f.insert("S_star".into(), json!(max.s_star));
    f.insert("argmax".into(), json!(max.argmax));
    if matches!(region.kind(), crate::region::RegionKind::FullTorus) {
        let l_scan = plan.config.l_scan.unwrap_or(DEFAULT_L_SCAN);
        let m = plan.system.m();
        let full = fk_ratio(&plan.system, p, &vec![0; m], pv - 1, l_scan)?;
        f.insert("fk_ratio_full".into(), json!(full.ratio));
        let subs = plan.config.subcubes.unwrap_or(0);
        if subs > 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut ratios = Vec::with_capacity(subs as usize);
            for _ in 0..subs {
                let w = rng.gen_range(pv / 4..pv).max(1);
                let u: Vec<u64> = (0..m).map(|_| rng.gen_range(0..pv)).collect();
                ratios.push(fk_ratio(&plan.system, p, &u, w, l_scan)?.ratio);
            }
            let max = ratios.iter().copied().fold(full.ratio, f64::max);
            f.insert("fk_sub_ratios".into(), json!(ratios));
            f.insert("fk_sub_max".into(), json!(max));
        }
    }
    Ok(f)
}

fn variety_fields(plan: &Plan, sol: &SolutionSet, region: &Region, seed: u64) -> Result<Fields> {
    let mut f = Fields::new();
    let t = count_in_region(sol, region)?;
    let t_c = count_in_region(sol, &Region::complement(region.clone()))?;
    let lw = lang_weil_residual(sol)?;
    f.insert("X_p".into(), json!(sol.len()));
    f.insert("T".into(), json!(t));
    f.insert("T_complement".into(), json!(t_c));
    f.insert("lang_weil_residual".into(), json!(lw));
    f.insert("nu".into(), json!(sol.nu()));
    let mut worst = lw.abs();
    if region.is_very_well_shaped() && !sol.is_empty() {
        let r3 = theorem3_residual_from_count(sol, t, region.measure());
        f.insert("theorem3_residual".into(), json!(r3));
        worst = worst.max(r3.abs());
    }
    if let Some(level) = plan.config.fouvry_level {
        let anchor = Arc::new(draw_anchor(sol.m(), seed, &boundary_denominators(sol.p(), MAX_LEVEL)));
        let res = fouvry_grid_residuals(sol, &anchor, level)?;
        let max = res.iter().map(|r| r.residual.abs()).fold(0.0, f64::max);
        f.insert("fouvry_max_abs_residual".into(), json!(max));
        f.insert("fouvry_counts".into(), json!(res.iter().map(|r| r.count).collect::<Vec<_>>()));
        worst = worst.max(max);
    }
    f.insert("suspected_bad_reduction".into(), json!(suspected_bad_reduction(worst)));
    Ok(f)
}

/// Writes `result.json`, `cells.csv` and `run_meta.json` into `dir`.
pub fn write_outputs(outcome: &RunOutcome, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_atomic(&dir.join("result.json"), outcome.result.to_json().as_bytes())?;
    write_atomic(&dir.join("cells.csv"), outcome.result.to_csv().as_bytes())?;
    let meta = json!({
        "config_hash": outcome.result.config_hash,
        "version": outcome.result.version,
        "wall_clock_s": outcome.wall_clock_s,
        "threads": rayon::current_num_threads(),
    });
    let mut s = serde_json::to_string_pretty(&meta)?;
    s.push('\n');
    write_atomic(&dir.join("run_meta.json"), s.as_bytes())?;
    Ok(())
}
