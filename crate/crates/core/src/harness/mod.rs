//! Experiment orchestration: TOML configs, prime/region sweeps, result files
//! and regression baselines.

mod baseline;
mod config;
mod run;


pub use baseline::{
    check_baselines, is_seed_dependent, record_or_check, Baseline, BaselineReport, CellCheck, CellStatus,
    Tolerance,
};
pub use config::{ExperimentConfig, ExperimentKind, Guards, OutputConfig, Plan, PrimeSpec};
pub use run::{cell_key, run, write_outputs, CellResult, ExperimentResult, Fields, RunOutcome};

use std::path::Path;

use crate::{Error, Result};

/// Outcome of [`run_config`].
#[derive(Debug)]
pub struct ConfigRun {
    pub outcome: RunOutcome,
    pub baseline: Option<BaselineReport>,
}

/// Validates, runs, writes outputs and handles the baseline named in the
/// config. Relative output paths are resolved against `base_dir`.
pub fn run_config(config: &ExperimentConfig, base_dir: &Path) -> Result<ConfigRun> {
    let plan = config
        .validate()
        .map_err(|errs| Error::Config(errs.join("; ")))?;
    let outcome = run(&plan);
    if let Some(dir) = &config.output.dir {
        write_outputs(&outcome, &base_dir.join(dir))?;
    }
    let baseline = match &config.output.baseline {
        Some(b) => Some(record_or_check(&outcome.result, &base_dir.join(b), Tolerance::default())?),
        None => None,
    };
    Ok(ConfigRun { outcome, baseline })
}
