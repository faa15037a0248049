//! Configuration-driven experiment runner.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

use std::path::PathBuf;

pub use config::{Experiment, RunConfig};
pub use error::{Result, RunError};
pub use output::{RunManifest, Series, Status};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub quiet: bool,
}

impl RunOptions {
    /// Applies command-line overrides and re-validates.
    pub fn apply(&self, mut cfg: RunConfig) -> Result<RunConfig> {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(d) = &self.output_dir {
            cfg.output_dir = Some(d.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs the configured experiment. The manifest is written even when a stage fails;
/// in that case the stage error is returned after the manifest is on disk.
pub fn run(cfg: &RunConfig, quiet: bool) -> Result<RunManifest> {
    cfg.validate()?;
    let dir = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("output").join(cfg.experiment.name()));
    let mut out = output::Output::open(&dir, quiet)?;
    match experiments::run_experiment(cfg, &mut out) {
        Ok(()) => out.finish(cfg, None),
        Err(e) => {
            out.finish(cfg, Some(&e))?;
            Err(e)
        }
    }
}
