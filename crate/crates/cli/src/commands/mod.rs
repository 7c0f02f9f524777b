pub mod ablate;
pub mod diagnose;
pub mod dynamics;
pub mod train;

use std::path::PathBuf;

use crate::config::{load_config, RunConfig};
use crate::error::CliError;

/// Loads a run configuration (or a manifest of one of `commands`) and applies
/// the output-directory override.
pub(crate) fn load_run_config(
    path: &std::path::Path,
    commands: &[&str],
    output_dir: Option<PathBuf>,
) -> Result<RunConfig, CliError> {
    let mut last = None;
    for cmd in commands {
        match load_config::<RunConfig>(path, cmd) {
            Ok(mut cfg) => {
                if let Some(dir) = output_dir {
                    cfg.output_dir = dir;
                }
                cfg.validate()?;
                return Ok(cfg);
            }
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap_or_else(|| CliError::Config("no command accepted".into())))
}
