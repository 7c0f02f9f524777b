//! Fixtures shared by the criterion benches.

use sgcl_core::graph::{generate_sbm, normalized_adjacency};
use sgcl_core::{CsrMatrix, DatasetBundle, EncoderConfig, TrainConfig};

/// The 400-node, 32-feature SBM used throughout the benches.
pub fn benchmark_bundle() -> DatasetBundle {
    generate_sbm(&Default::default(), 0).expect("default SBM is valid")
}

pub fn propagation(bundle: &DatasetBundle) -> CsrMatrix {
    normalized_adjacency(&bundle.graph)
}

/// Encoder of the given widths for `bundle`.
pub fn encoder(bundle: &DatasetBundle, hidden_dim: usize, out_dim: usize) -> EncoderConfig {
    EncoderConfig {
        in_dim: bundle.feature_dim(),
        hidden_dim,
        out_dim,
        ..EncoderConfig::default()
    }
}

/// Single-view training config without probing.
pub fn train_config(hidden_dim: usize, out_dim: usize) -> TrainConfig {
    let mut cfg = TrainConfig {
        probe_every: 0,
        ..TrainConfig::default()
    };
    cfg.encoder.hidden_dim = hidden_dim;
    cfg.encoder.out_dim = out_dim;
    cfg
}
