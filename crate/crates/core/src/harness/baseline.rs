use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::run::{CellResult, ExperimentResult};
use crate::cache::write_atomic;
use crate::Result;

/// Frozen reference values of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub config_hash: String,
    pub seed: u64,
    pub cells: Vec<CellResult>,
}

impl Baseline {
    pub fn from_result(result: &ExperimentResult) -> Self {
        Baseline {
            config_hash: result.config_hash.clone(),
            seed: result.seed,
            cells: result.cells.clone(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        serde_json::from_str(&std::fs::read_to_string(path)?)
            .map_err(|e| crate::Error::Config(format!("baseline {}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        write_atomic(path, s.as_bytes())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    /// Relative tolerance for sums, measures and other floating fields.
    pub sum_rel: f64,
    /// Relative tolerance for discrepancy-derived fields.
    pub disc_rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            sum_rel: 1e-9,
            disc_rel: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellStatus {
    Pass,
    Recorded,
    /// Only anchor- or sampling-dependent fields differ and the seeds differ.
    SeedSensitive,
    Fail,
    Missing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellCheck {
    pub key: String,
    pub status: CellStatus,
    /// Fields that differ, with `baseline -> result` values.
    pub details: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub config_hash_matches: bool,
    pub cells: Vec<CellCheck>,
}

impl BaselineReport {
    pub fn passed(&self) -> bool {
        self.cells
            .iter()
            .all(|c| !matches!(c.status, CellStatus::Fail | CellStatus::Missing))
    }

    pub fn count(&self, status: CellStatus) -> usize {
        self.cells.iter().filter(|c| c.status == status).count()
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.cells {
            let tag = match c.status {
                CellStatus::Pass => "pass",
                CellStatus::Recorded => "recorded",
                CellStatus::SeedSensitive => "seed-sensitive",
                CellStatus::Fail => "FAIL",
                CellStatus::Missing => "MISSING",
            };
            s.push_str(&format!("{tag:>14}  {}\n", c.key));
            for d in &c.details {
                s.push_str(&format!("{:>16}{d}\n", ""));
            }
        }
        s.push_str(&format!(
            "{} cells: {} pass, {} recorded, {} seed-sensitive, {} failed, {} missing\n",
            self.cells.len(),
            self.count(CellStatus::Pass),
            self.count(CellStatus::Recorded),
            self.count(CellStatus::SeedSensitive),
            self.count(CellStatus::Fail),
            self.count(CellStatus::Missing),
        ));
        s
    }
}

/// Fields whose values depend on the drawn anchor or on random sampling.
pub fn is_seed_dependent(field: &str) -> bool {
    ["cover_", "fouvry_", "sampled_", "fk_sub"]
        .iter()
        .any(|pre| field.starts_with(pre))
}

fn is_discrepancy_field(field: &str) -> bool {
    field.ends_with("_D") || field.contains("ratio") || field == "ks_bound"
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

fn values_match(a: &Value, b: &Value, tol: f64) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => match (x.as_i64(), y.as_i64(), x.as_u64(), y.as_u64()) {
            (Some(i), Some(j), _, _) => i == j,
            (_, _, Some(i), Some(j)) => i == j,
            _ if x.is_f64() || y.is_f64() => {
                // integers never compare against floats
                x.is_f64() && y.is_f64() && rel_close(x.as_f64().unwrap(), y.as_f64().unwrap(), tol)
            }
            _ => false,
        },
        (Value::Array(x), Value::Array(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(u, v)| values_match(u, v, tol))
        }
        _ => a == b,
    }
}

fn compare_cell(base: &CellResult, got: &CellResult, seeds_differ: bool, tol: Tolerance) -> CellCheck {
    let mut hard = Vec::new();
    let mut soft = Vec::new();
    if base.error != got.error {
        hard.push(format!("error: {:?} -> {:?}", base.error, got.error));
    }
    let keys: std::collections::BTreeSet<&String> = base.fields.keys().chain(got.fields.keys()).collect();
    for k in keys {
        let t = if is_discrepancy_field(k) { tol.disc_rel } else { tol.sum_rel };
        let (a, b) = (base.fields.get(k), got.fields.get(k));
        let same = match (a, b) {
            (Some(a), Some(b)) => values_match(a, b, t),
            (None, None) => true,
            _ => false,
        };
        if !same {
            let msg = format!(
                "{k}: {} -> {}",
                a.map_or("absent".into(), Value::to_string),
                b.map_or("absent".into(), Value::to_string)
            );
            if seeds_differ && is_seed_dependent(k) {
                soft.push(msg);
            } else {
                hard.push(msg);
            }
        }
    }
    let status = if !hard.is_empty() {
        CellStatus::Fail
    } else if !soft.is_empty() {
        CellStatus::SeedSensitive
    } else {
        CellStatus::Pass
    };
    hard.extend(soft);
    CellCheck {
        key: got.key.clone(),
        status,
        details: hard,
    }
}

/// Compares a result against a baseline. Integer fields must match exactly;
/// floating fields within the relative tolerances. Baseline cells absent
/// from the result are failures; new cells are reported as recorded.
pub fn check_baselines(result: &ExperimentResult, baseline: &Baseline, tol: Tolerance) -> BaselineReport {
    let seeds_differ = result.seed != baseline.seed;
    let mut cells = Vec::new();
    for base in &baseline.cells {
        match result.cell(&base.key) {
            Some(got) => cells.push(compare_cell(base, got, seeds_differ, tol)),
            None => cells.push(CellCheck {
                key: base.key.clone(),
                status: CellStatus::Missing,
                details: vec!["cell absent from result".into()],
            }),
        }
    }
    for got in &result.cells {
        if !baseline.cells.iter().any(|b| b.key == got.key) {
            cells.push(CellCheck {
                key: got.key.clone(),
                status: CellStatus::Recorded,
                details: Vec::new(),
            });
        }
    }
    BaselineReport {
        config_hash_matches: result.config_hash == baseline.config_hash,
        cells,
    }
}

/// Records a fresh baseline (all cells "recorded") or compares against the
/// existing one.
pub fn record_or_check(result: &ExperimentResult, path: &Path, tol: Tolerance) -> Result<BaselineReport> {
    if path.exists() {
        return Ok(check_baselines(result, &Baseline::load(path)?, tol));
    }
    Baseline::from_result(result).save(path)?;
    Ok(BaselineReport {
        config_hash_matches: true,
        cells: result
            .cells
            .iter()
            .map(|c| CellCheck {
                key: c.key.clone(),
                status: CellStatus::Recorded,
                details: Vec::new(),
            })
            .collect(),
    })
}
