//! Experiment runner: reads a TOML config, runs one experiment family and
//! writes long-format CSV plus a JSON run manifest.

pub mod config;
pub mod error;
pub mod experiments;
pub mod manifest;

use std::path::Path;

use chrono::Utc;

pub use config::Config;
pub use error::{CliError, Result};
pub use experiments::{Experiment, Outcome, Table};
pub use manifest::RunManifest;

/// Runs `experiment` on the current rayon pool and writes its CSVs and
/// manifest into `out_dir`. Failed validation checks are reported after
/// the outputs are written.
pub fn run_and_write(experiment: Experiment, cfg: &Config, out_dir: &Path) -> Result<RunManifest> {
    let started = Utc::now();
    let mut manifest = RunManifest::new(experiment.name(), cfg, started, rayon::current_num_threads());
    let outcome = experiment.run(cfg)?;
    std::fs::create_dir_all(out_dir).map_err(|source| CliError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    for table in &outcome.tables {
        table.write(out_dir)?;
        manifest.rows.insert(table.file_name(), table.rows.len());
    }
    manifest.failed_checks = outcome.failed_checks;
    manifest.finish(Utc::now());
    manifest.write(out_dir)?;
    if outcome.failed_checks > 0 {
        return Err(CliError::ValidationFailed(outcome.failed_checks));
    }
    Ok(manifest)
}
