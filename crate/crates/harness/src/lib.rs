//! Experiment harness: JSON configuration, seeded and thread-count-independent
//! Monte Carlo runs over the core simulator, and CSV output.

pub mod config;
pub mod error;
pub mod run;
pub mod table;

pub use config::{parse_config, ExperimentConfig, ExperimentKind};
pub use error::{HarnessError, Result};
pub use run::{build_id, run_experiment, write_sidecar};
pub use table::{emit_csv, ResultTable};

use std::path::Path;

/// Reads and validates a configuration file, then applies command-line overrides.
pub fn load_config(path: &Path, seed: Option<u64>, trials: Option<u64>) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let mut raw: config::RawConfig = serde_json::from_str(&text)?;
    if seed.is_some() {
        raw.seed = seed;
    }
    if trials.is_some() {
        raw.trials = trials;
    }
    let cfg = ExperimentConfig::from_raw(raw)?;
    cfg.validate()?;
    Ok(cfg)
}
