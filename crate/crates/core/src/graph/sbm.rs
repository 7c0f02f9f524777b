use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{DatasetBundle, Graph};
use crate::error::{Result, SgclError};
use crate::numerics::DenseMatrix;
use crate::seeded_rng;

/// Stochastic block model with block-informative Gaussian node features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SbmConfig {
    pub num_communities: usize,
    pub nodes_per_community: usize,
    pub intra_prob: f64,
    pub inter_prob: f64,
    pub feature_dim: usize,
    /// Mean offset on the dimensions assigned to a node's community.
    pub feature_signal: f64,
    /// Standard deviation of the additive noise on every dimension.
    pub feature_noise: f64,
}

impl Default for SbmConfig {
    /// The desk-scale benchmark: 4 communities of 100 nodes, 32 features.
    fn default() -> Self {
        Self {
            num_communities: 4,
            nodes_per_community: 100,
            intra_prob: 0.1,
            inter_prob: 0.01,
            feature_dim: 32,
            feature_signal: 0.4,
            feature_noise: 1.0,
        }
    }
}

impl SbmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_communities == 0 || self.nodes_per_community == 0 {
            return Err(SgclError::Config("SBM needs at least one community and one node".into()));
        }
        if !(0.0 <= self.inter_prob && self.inter_prob < self.intra_prob && self.intra_prob <= 1.0) {
            return Err(SgclError::Config(format!(
                "SBM probabilities must satisfy 0 <= inter < intra <= 1, got inter={} intra={}",
                self.inter_prob, self.intra_prob
            )));
        }
        if self.feature_dim < self.num_communities {
            return Err(SgclError::Config(format!(
                "feature_dim {} is smaller than num_communities {}",
                self.feature_dim, self.num_communities
            )));
        }
        if !(self.feature_signal.is_finite() && self.feature_noise.is_finite() && self.feature_noise >= 0.0) {
            return Err(SgclError::Config("feature signal/noise must be finite, noise >= 0".into()));
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.num_communities * self.nodes_per_community
    }

    /// Informative dimensions of community `c`: a contiguous block of
    /// `ceil(F / k)` columns (the last block may be shorter or empty).
    pub fn informative_dims(&self, c: usize) -> std::ops::Range<usize> {
        let block = self.feature_dim.div_ceil(self.num_communities);
        let start = (c * block).min(self.feature_dim);
        start..((c + 1) * block).min(self.feature_dim)
    }
}

/// Samples an SBM dataset. Node `i` belongs to community `i / nodes_per_community`.
pub fn generate_sbm(config: &SbmConfig, seed: u64) -> Result<DatasetBundle> {
    config.validate()?;
    let mut rng = seeded_rng(seed);
    let n = config.num_nodes();
    let community = |i: usize| i / config.nodes_per_community;

    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if community(u) == community(v) {
                config.intra_prob
            } else {
                config.inter_prob
            };
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    let graph = Graph::from_undirected_edges(n, edges)?;

    let f = config.feature_dim;
    let mut features = DenseMatrix::zeros(n, f);
    for i in 0..n {
        let dims = config.informative_dims(community(i));
        let row = features.row_mut(i);
        for (j, x) in row.iter_mut().enumerate() {
            let noise: f64 = StandardNormal.sample(&mut rng);
            let signal = if dims.contains(&j) { config.feature_signal } else { 0.0 };
            *x = signal + config.feature_noise * noise;
        }
    }
    let labels = (0..n).map(community).collect();
    DatasetBundle::new(graph, features, labels, config.num_communities)
}
