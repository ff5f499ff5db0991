use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dyadic::DepthPolicy;
use crate::expsum::SCAN_GUARD;
use crate::field_poly::{is_prime, primes_in, PolySystem, PrimeModulus, SystemKind};
use crate::region::{Region, RegionDescriptor};
use crate::{Error, Result, LATTICE_GUARD};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Discrepancy,
    Expsum,
    Cover,
    Variety,
    Sweep,
}

/// Either an explicit list (every entry must be prime) or an inclusive range
/// filtered to its primes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PrimeSpec {
    List(Vec<u64>),
    Range { range: [u64; 2] },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Guards {
    /// Cap on `p^m` scans.
    #[serde(default = "default_lattice")]
    pub lattice: u64,
    /// Cap on coefficient scans `(2L+1)^n - 1`.
    #[serde(default = "default_scan")]
    pub scan: u64,
}

fn default_lattice() -> u64 {
    LATTICE_GUARD as u64
}

fn default_scan() -> u64 {
    SCAN_GUARD as u64
}

impl Default for Guards {
    fn default() -> Self {
        Guards {
            lattice: default_lattice(),
            scan: default_scan(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory for `result.json`, `cells.csv` and `run_meta.json`.
    pub dir: Option<String>,
    /// Regression baseline, written on the first run and compared afterwards.
    pub baseline: Option<String>,
}

fn default_regions() -> Vec<RegionDescriptor> {
    vec![RegionDescriptor::Full]
}

/// One experiment, as read from a TOML file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Mandatory; `Option` only so that its absence is reported with the
    /// other validation errors.
    pub seed: Option<u64>,
    /// `;`-separated polynomials.
    pub system: String,
    /// Number of variables; defaults to the largest index used.
    #[serde(default)]
    pub m: Option<usize>,
    pub primes: PrimeSpec,
    #[serde(default = "default_regions")]
    pub regions: Vec<RegionDescriptor>,
    #[serde(default)]
    pub depth: Option<DepthPolicy>,
    /// Scan box for `S*`.
    #[serde(default, rename = "L")]
    pub l: Option<u64>,
    /// Scan box for Fouvry–Katz ratios.
    #[serde(default)]
    pub l_scan: Option<u64>,
    /// Random sub-cubes per prime for Fouvry–Katz ratios.
    #[serde(default)]
    pub subcubes: Option<u32>,
    #[serde(default)]
    pub trials: Option<u64>,
    #[serde(default)]
    pub nu: Option<u32>,
    #[serde(default)]
    pub justification: Option<String>,
    /// Grid level `l` (side `2^-l`) for the cube residuals of variety experiments.
    #[serde(default)]
    pub fouvry_level: Option<u32>,
    #[serde(default)]
    pub guards: Guards,
    #[serde(default)]
    pub output: OutputConfig,
}

/// A configuration that passed validation.
#[derive(Clone, Debug)]
pub struct Plan {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub system: PolySystem,
    pub primes: Vec<PrimeModulus>,
    pub regions: Vec<Region>,
    pub warnings: Vec<String>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash_hex(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    fn system_kind(&self) -> SystemKind {
        match self.kind {
            ExperimentKind::Variety => SystemKind::Zero,
            _ => SystemKind::Value,
        }
    }

    /// Checks everything and lists every problem before any cell runs.
    pub fn validate(&self) -> std::result::Result<Plan, Vec<String>> {
        let mut errs = Vec::new();
        let mut warnings = Vec::new();
        if self.seed.is_none() {
            errs.push("seed is mandatory".to_string());
        }
        if self.guards.lattice as u128 > LATTICE_GUARD {
            errs.push(format!("guards.lattice exceeds the hard cap {LATTICE_GUARD}"));
        }
        if self.guards.scan as u128 > SCAN_GUARD {
            errs.push(format!("guards.scan exceeds the hard cap {SCAN_GUARD}"));
        }
        let system = match PolySystem::parse(&self.system, self.system_kind(), self.m) {
            Ok(s) => Some(s),
            Err(e) => {
                errs.push(format!("system: {e}"));
                None
            }
        };
        let primes: Vec<u64> = match &self.primes {
            PrimeSpec::List(v) => {
                for &p in v {
                    if !is_prime(p) {
                        errs.push(format!("primes: {p} is not prime"));
                    }
                }
                v.iter().copied().filter(|&p| is_prime(p)).collect()
            }
            PrimeSpec::Range { range: [lo, hi] } => {
                if lo > hi {
                    errs.push(format!("primes: empty range [{lo}, {hi}]"));
                    Vec::new()
                } else if hi - lo > 100_000_000 {
                    errs.push("primes: range too wide".to_string());
                    Vec::new()
                } else {
                    primes_in(*lo, *hi)
                }
            }
        };
        let primes: Vec<PrimeModulus> = primes
            .into_iter()
            .filter_map(|p| match PrimeModulus::new(p) {
                Ok(pm) => Some(pm),
                Err(e) => {
                    errs.push(format!("primes: {e}"));
                    None
                }
            })
            .collect();
        if primes.is_empty() && errs.is_empty() {
            warnings.push("prime list is empty; nothing to run".to_string());
        }
        let mut regions = Vec::new();
        if let Some(sys) = &system {
            let m = sys.m();
            for &p in &primes {
                if (p.get() as u128).saturating_pow(m as u32) > self.guards.lattice as u128 {
                    errs.push(format!("p = {} gives p^m above the lattice guard {}", p.get(), self.guards.lattice));
                }
            }
            for (i, d) in self.regions.iter().enumerate() {
                match Region::from_descriptor(d, m) {
                    Ok(r) => regions.push(r),
                    Err(e) => errs.push(format!("regions[{i}]: {e}")),
                }
            }
            if let Some(l) = self.l {
                let scan = ((2 * l as u128) + 1).saturating_pow(sys.n() as u32) - 1;
                if l == 0 {
                    errs.push("L must be at least 1".to_string());
                } else if scan > self.guards.scan as u128 {
                    errs.push(format!("L = {l} gives a coefficient scan above the guard {}", self.guards.scan));
                }
            }
        }
        if self.regions.is_empty() {
            errs.push("regions must not be empty".to_string());
        }
        if let Some(DepthPolicy::Explicit(0)) = self.depth {
            errs.push("depth: explicit M must be at least 1".to_string());
        }
        if self.trials == Some(0) {
            errs.push("trials must be at least 1".to_string());
        }
        match self.kind {
            ExperimentKind::Variety => {
                match self.nu {
                    None => errs.push("nu is required for variety experiments".to_string()),
                    Some(0) => errs.push("nu must be at least 1".to_string()),
                    _ => {}
                }
                if self.justification.as_deref().is_none_or(|s| s.trim().is_empty()) {
                    errs.push("justification is required for variety experiments".to_string());
                }
            }
            _ => {
                if self.nu.is_some() {
                    warnings.push("nu is only used by variety experiments".to_string());
                }
            }
        }
        if errs.is_empty() {
            Ok(Plan {
                config: self.clone(),
                seed: self.seed.unwrap(),
                system: system.unwrap(),
                primes,
                regions,
                warnings,
            })
        } else {
            Err(errs)
        }
    }
}
