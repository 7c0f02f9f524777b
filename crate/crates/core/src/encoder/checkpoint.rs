use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EncoderConfig, EncoderParams};
use crate::error::{Result, SgclError};
use crate::numerics::{read_matrix_file, write_matrix_file, DenseMatrix};

pub const CHECKPOINT_FORMAT: &str = "sgcl-checkpoint-v1";
const MANIFEST: &str = "manifest.json";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorEntry {
    name: String,
    file: String,
    rows: usize,
    cols: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format: String,
    config: EncoderConfig,
    tensors: Vec<TensorEntry>,
}

fn as_matrices(params: &EncoderParams) -> Vec<(&'static str, DenseMatrix)> {
    let row = |v: &[f64]| DenseMatrix::from_vec(1, v.len(), v.to_vec()).expect("row vector");
    vec![
        ("w1", params.w1.clone()),
        ("b1", row(&params.b1)),
        ("w2", params.w2.clone()),
        ("b2", row(&params.b2)),
        ("bn1_scale", row(&params.bn1_scale)),
        ("bn1_shift", row(&params.bn1_shift)),
        ("bn2_scale", row(&params.bn2_scale)),
        ("bn2_shift", row(&params.bn2_shift)),
        ("prelu_slope", row(&[params.prelu_slope])),
    ]
}

/// Writes one binary matrix file per tensor plus `manifest.json`.
pub fn save_checkpoint(dir: impl AsRef<Path>, config: &EncoderConfig, params: &EncoderParams) -> Result<()> {
    let dir = dir.as_ref();
    params.check_shapes(config)?;
    fs::create_dir_all(dir)?;
    let mut tensors = Vec::new();
    for (name, m) in as_matrices(params) {
        let file = format!("{name}.bin");
        write_matrix_file(dir.join(&file), &m)?;
        tensors.push(TensorEntry {
            name: name.to_string(),
            file,
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let manifest = Manifest {
        format: CHECKPOINT_FORMAT.to_string(),
        config: config.clone(),
        tensors,
    };
    fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

pub fn load_checkpoint(dir: impl AsRef<Path>) -> Result<(EncoderConfig, EncoderParams)> {
    let dir = dir.as_ref();
    let corrupt = |reason: String| SgclError::Corrupt {
        path: dir.display().to_string(),
        reason,
    };
    let text = fs::read_to_string(dir.join(MANIFEST))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| corrupt(format!("manifest: {e}")))?;
    if manifest.format != CHECKPOINT_FORMAT {
        return Err(corrupt(format!("unknown format {:?}", manifest.format)));
    }
    let tensor = |name: &str| -> Result<DenseMatrix> {
        let entry = manifest
            .tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| corrupt(format!("missing tensor {name}")))?;
        let m = read_matrix_file(dir.join(&entry.file))?;
        if m.shape() != (entry.rows, entry.cols) {
            return Err(corrupt(format!("tensor {name} shape differs from manifest")));
        }
        Ok(m)
    };
    let params = EncoderParams {
        w1: tensor("w1")?,
        b1: tensor("b1")?.into_vec(),
        w2: tensor("w2")?,
        b2: tensor("b2")?.into_vec(),
        bn1_scale: tensor("bn1_scale")?.into_vec(),
        bn1_shift: tensor("bn1_shift")?.into_vec(),
        bn2_scale: tensor("bn2_scale")?.into_vec(),
        bn2_shift: tensor("bn2_shift")?.into_vec(),
        prelu_slope: *tensor("prelu_slope")?
            .as_slice()
            .first()
            .ok_or_else(|| corrupt("empty prelu_slope".into()))?,
    };
    manifest.config.validate()?;
    params
        .check_shapes(&manifest.config)
        .map_err(|e| corrupt(e.to_string()))?;
    Ok((manifest.config, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;

    #[test]
    fn save_then_load_restores_params() {
        let cfg = EncoderConfig {
            in_dim: 3,
            hidden_dim: 5,
            out_dim: 2,
            ..EncoderConfig::default()
        };
        let p = EncoderParams::init(&cfg, &mut seeded_rng(8)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(dir.path(), &cfg, &p).unwrap();
        let (c2, p2) = load_checkpoint(dir.path()).unwrap();
        assert_eq!(c2, cfg);
        assert_eq!(p2, p);
    }

    #[test]
    fn truncated_tensor_is_corrupt() {
        let cfg = EncoderConfig {
            in_dim: 2,
            hidden_dim: 2,
            out_dim: 2,
            ..EncoderConfig::default()
        };
        let p = EncoderParams::init(&cfg, &mut seeded_rng(8)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(dir.path(), &cfg, &p).unwrap();
        let f = dir.path().join("w2.bin");
        let mut bytes = fs::read(&f).unwrap();
        bytes.truncate(bytes.len() - 3);
        fs::write(&f, bytes).unwrap();
        assert!(matches!(load_checkpoint(dir.path()), Err(SgclError::Corrupt { .. })));
    }
}
