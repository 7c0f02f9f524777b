use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SgclError};
use crate::seeded_rng;

/// Disjoint train/validation/test node index sets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_idx: Vec<usize>,
    pub val_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

impl SplitSpec {
    pub fn validate(&self, num_nodes: usize) -> Result<()> {
        let mut seen = vec![false; num_nodes];
        for &i in self.train_idx.iter().chain(&self.val_idx).chain(&self.test_idx) {
            if i >= num_nodes {
                return Err(SgclError::Consistency(format!(
                    "split index {i} not below {num_nodes}"
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(SgclError::Consistency(format!("split index {i} repeated")));
            }
        }
        Ok(())
    }
}

/// Random permutation split. Train and validation sizes are
/// `floor(fraction * N)`; the remainder goes to test.
pub fn random_split(num_nodes: usize, fractions: (f64, f64, f64), seed: u64) -> Result<SplitSpec> {
    if num_nodes == 0 {
        return Err(SgclError::Config("cannot split zero nodes".into()));
    }
    let (tr, va, te) = fractions;
    if !(tr > 0.0 && va > 0.0 && te > 0.0) || (tr + va + te - 1.0).abs() > 1e-9 {
        return Err(SgclError::Config(format!(
            "split fractions must be positive and sum to 1, got {fractions:?}"
        )));
    }
    let mut perm: Vec<usize> = (0..num_nodes).collect();
    perm.shuffle(&mut seeded_rng(seed));
    // The epsilon absorbs products such as 0.57 * 100 = 56.999...
    let size = |f: f64| ((f * num_nodes as f64) + 1e-9).floor() as usize;
    let n_train = size(tr).min(num_nodes);
    let n_val = size(va).min(num_nodes - n_train);
    let test_idx = perm.split_off(n_train + n_val);
    let val_idx = perm.split_off(n_train);
    Ok(SplitSpec {
        train_idx: perm,
        val_idx,
        test_idx,
    })
}
