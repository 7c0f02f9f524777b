//! Single stochastic view generation: undirected edge dropping followed by
//! whole-column feature masking.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SgclError};
use crate::graph::{DatasetBundle, Graph};
use crate::numerics::DenseMatrix;
use crate::seeded_rng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    /// Edge drop probability.
    pub p_e: f64,
    /// Feature-dimension drop probability.
    pub p_f: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self { p_e: 0.4, p_f: 0.1 }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        check_prob("p_e", self.p_e)?;
        check_prob("p_f", self.p_f)
    }
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if (0.0..1.0).contains(&p) {
        Ok(())
    } else {
        Err(SgclError::Config(format!("{name} must lie in [0, 1), got {p}")))
    }
}

/// One augmented input `(A_t, X_t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedView {
    pub graph: Graph,
    pub features: DenseMatrix,
    /// Seed of the private stream that produced this view.
    pub seed_used: u64,
}

/// Keeps every undirected edge independently with probability `1 - p_e`;
/// both stored directions share one draw.
pub fn drop_edges(graph: &Graph, p_e: f64, rng: &mut impl Rng) -> Result<Graph> {
    check_prob("p_e", p_e)?;
    if p_e == 0.0 {
        return Ok(graph.clone());
    }
    let kept: Vec<(usize, usize)> = graph
        .undirected_edges()
        .filter(|_| !rng.random_bool(p_e))
        .collect();
    Graph::from_undirected_edges(graph.num_nodes(), kept)
}

/// Zeroes each feature column independently with probability `p_f`, for
/// every node at once.
pub fn mask_features(features: &DenseMatrix, p_f: f64, rng: &mut impl Rng) -> Result<DenseMatrix> {
    check_prob("p_f", p_f)?;
    let mut out = features.clone();
    if p_f == 0.0 {
        return Ok(out);
    }
    let dropped: Vec<bool> = (0..features.cols()).map(|_| rng.random_bool(p_f)).collect();
    let cols = features.cols();
    for row in out.as_mut_slice().chunks_exact_mut(cols.max(1)) {
        for (x, &d) in row.iter_mut().zip(&dropped) {
            if d {
                *x = 0.0;
            }
        }
    }
    Ok(out)
}

/// Draws a view seed from `rng`, then drops edges and masks features with a
/// stream derived from that seed.
pub fn augment(bundle: &DatasetBundle, config: &AugmentConfig, rng: &mut impl RngCore) -> Result<AugmentedView> {
    config.validate()?;
    let seed_used = rng.next_u64();
    augment_with_seed(bundle, config, seed_used)
}

/// Reproduces the view recorded with `seed_used`.
pub fn augment_with_seed(bundle: &DatasetBundle, config: &AugmentConfig, seed_used: u64) -> Result<AugmentedView> {
    config.validate()?;
    let mut view_rng = seeded_rng(seed_used);
    let graph = drop_edges(&bundle.graph, config.p_e, &mut view_rng)?;
    let features = mask_features(&bundle.features, config.p_f, &mut view_rng)?;
    Ok(AugmentedView {
        graph,
        features,
        seed_used,
    })
}
