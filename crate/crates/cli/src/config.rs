use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use sgcl_core::diagnostics::TsDynamicsConfig;
use sgcl_core::evaluator::ProbeConfig;
use sgcl_core::graph::{generate_sbm, load_dataset, SbmConfig};
use sgcl_core::trainer::TrainConfig;
use sgcl_core::DatasetBundle;

use crate::error::CliError;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SbmSource {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub params: SbmConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileSource {
    pub edges: PathBuf,
    pub features: PathBuf,
    pub labels: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    Sbm(SbmSource),
    Files(FileSource),
}

impl Default for DatasetSource {
    fn default() -> Self {
        Self::Sbm(SbmSource {
            seed: 0,
            params: SbmConfig::default(),
        })
    }
}

impl DatasetSource {
    pub fn load(&self) -> Result<DatasetBundle, CliError> {
        Ok(match self {
            Self::Sbm(s) => generate_sbm(&s.params, s.seed)?,
            Self::Files(f) => load_dataset(&f.edges, &f.features, &f.labels)?,
        })
    }
}

/// Configuration of `train`, `ablate` and `diagnose`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetSource,
    pub train: TrainConfig,
    pub probe: ProbeConfig,
    pub eval_splits: usize,
    pub output_dir: PathBuf,
    pub emit_plots: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetSource::default(),
            train: TrainConfig::default(),
            probe: ProbeConfig::default(),
            eval_splits: 10,
            output_dir: PathBuf::from("sgcl-out"),
            emit_plots: true,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.eval_splits == 0 {
            return Err(CliError::Config("eval_splits must be at least 1".into()));
        }
        self.probe.validate()?;
        let mut train = self.train.clone();
        train.probe = self.probe.clone();
        train.validate()?;
        Ok(())
    }

    /// Training configuration with the probe settings and input width filled in.
    pub fn resolved_train(&self, bundle: &DatasetBundle) -> Result<TrainConfig, CliError> {
        let mut train = self.train.clone();
        train.probe = self.probe.clone();
        train.encoder = train.resolved_encoder(bundle.feature_dim())?;
        Ok(train)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum DynamicsInput {
    /// Gaussian rows, column-centred then scaled to unit length.
    Random { nodes: usize, dim: usize, seed: u64 },
    /// Rows `±e_k` for every axis, so `Σ` is a multiple of the identity.
    Isotropic { dim: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsRunConfig {
    pub input: DynamicsInput,
    pub simulation: TsDynamicsConfig,
    pub output_dir: PathBuf,
    pub emit_plots: bool,
}

impl Default for DynamicsRunConfig {
    fn default() -> Self {
        Self {
            input: DynamicsInput::Random {
                nodes: 64,
                dim: 8,
                seed: 0,
            },
            simulation: TsDynamicsConfig::default(),
            output_dir: PathBuf::from("sgcl-dynamics"),
            emit_plots: true,
        }
    }
}

/// Written next to every run's outputs. Passing it back as `--config`
/// re-runs the same command with the same resolved settings.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub manifest_version: u32,
    pub command: String,
    pub sgcl_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
    pub config: Value,
}

impl Manifest {
    pub fn new(command: &str, config: &impl Serialize, checkpoint: Option<&Path>) -> Result<Self, CliError> {
        Ok(Self {
            manifest_version: MANIFEST_VERSION,
            command: command.to_string(),
            sgcl_version: env!("CARGO_PKG_VERSION").to_string(),
            checkpoint: checkpoint.map(Path::to_path_buf),
            config: serde_json::to_value(config).map_err(|e| CliError::Config(e.to_string()))?,
        })
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Config(e.to_string()))?;
        crate::output::write_text(&dir.join("manifest.json"), &(text + "\n"))
    }
}

/// Reads a config file, or the config embedded in a manifest for `command`.
pub fn load_config<T: DeserializeOwned>(path: &Path, command: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let value = if value.get("manifest_version").is_some() {
        let manifest: Manifest = serde_json::from_value(value)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if manifest.command != command {
            return Err(CliError::Config(format!(
                "{} is a manifest of `{}`, not `{command}`",
                path.display(),
                manifest.command
            )));
        }
        manifest.config
    } else {
        value
    };
    serde_json::from_value(value).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
