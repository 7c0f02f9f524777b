//! Negative-sample-free graph contrastive learning with a single augmented
//! view, a single GCN encoder and a parameter-free covariance predictor.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: dense/sparse matrices, Glorot initialisation, AdamW.
//! - [`graph`]: CSR graphs, dataset loading, SBM generation, splits.
//! - [`augment`]: edge dropping and feature-dimension masking.
//! - [`encoder`]: two-layer GCN with batch norm and a hand-written backward pass.
//! - [`predictor`]: inferential, MLP and identity predictors.
//! - [`trainer`]: the single-view training loop and the two-view EMA baseline.
//! - [`evaluator`]: linear-probe evaluation of frozen embeddings.
//! - [`diagnostics`]: alignment, decorrelation, eigenvector and teacher-student checks.

pub mod augment;
pub mod diagnostics;
pub mod encoder;
pub mod error;
pub mod evaluator;
pub mod graph;
pub mod numerics;
pub mod predictor;
pub mod trainer;

pub use augment::{augment, drop_edges, mask_features, AugmentConfig, AugmentedView};
pub use encoder::{Activation, EncoderConfig, EncoderParams, ForwardMode, ForwardTrace};
pub use error::{Result, SgclError};
pub use graph::{DatasetBundle, Graph, SbmConfig, SplitSpec};
pub use numerics::{CsrMatrix, DenseMatrix, OptimHyper, OptimState};
pub use predictor::{PredictorKind, PredictorMatrix};
pub use trainer::{LossSign, MetricsLog, Mode, PredictorSource, TrainConfig, TrainState};

/// Node feature matrix, one row per node.
pub type FeatureMatrix = DenseMatrix;
/// Node representation matrix produced by the encoder, one row per node.
pub type RepresentationMatrix = DenseMatrix;

/// Deterministic random stream used everywhere a seed is accepted.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Builds the crate's seeded random stream.
pub fn seeded_rng(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}
