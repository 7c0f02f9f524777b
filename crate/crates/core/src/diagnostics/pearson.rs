use rand::Rng;

use super::{dot, norm, DEGENERATE_NORM};
use crate::error::{Result, SgclError};
use crate::numerics::DenseMatrix;

pub const DEFAULT_MAX_NODES: usize = 512;

#[derive(Clone, Debug, PartialEq)]
pub struct PearsonReport {
    pub mean_abs_offdiag: f64,
    /// Correlation between the sampled node rows.
    pub matrix: DenseMatrix,
    /// Sampled node indices, ascending; row `k` of `matrix` is node `nodes[k]`.
    pub nodes: Vec<usize>,
    /// Sampled rows with zero variance; their correlations are defined as 0.
    pub constant_rows: usize,
}

/// Pearson correlation between node representation rows, over a uniform
/// sample of at most `max_nodes` nodes (all nodes when `N <= max_nodes`).
pub fn pearson_offdiag(h: &DenseMatrix, max_nodes: usize, rng: &mut impl Rng) -> Result<PearsonReport> {
    if h.cols() < 2 {
        return Err(SgclError::Usage("row-wise Pearson needs at least 2 dimensions".into()));
    }
    if max_nodes < 2 || h.rows() < 2 {
        return Err(SgclError::Usage("row-wise Pearson needs at least 2 nodes".into()));
    }
    let nodes: Vec<usize> = if h.rows() <= max_nodes {
        (0..h.rows()).collect()
    } else {
        let mut s = rand::seq::index::sample(rng, h.rows(), max_nodes).into_vec();
        s.sort_unstable();
        s
    };
    let mut z = h.select_rows(&nodes);
    let mut constant = vec![false; nodes.len()];
    for (k, flag) in constant.iter_mut().enumerate() {
        let row = z.row_mut(k);
        let mean = row.iter().sum::<f64>() / row.len() as f64;
        row.iter_mut().for_each(|v| *v -= mean);
        let n = norm(row);
        if n < DEGENERATE_NORM {
            row.fill(0.0);
            *flag = true;
        } else {
            row.iter_mut().for_each(|v| *v /= n);
        }
    }
    let m = nodes.len();
    let mut matrix = DenseMatrix::zeros(m, m);
    let mut sum = 0.0;
    for a in 0..m {
        matrix[(a, a)] = if constant[a] { 0.0 } else { 1.0 };
        for b in (a + 1)..m {
            let r = dot(z.row(a), z.row(b));
            matrix[(a, b)] = r;
            matrix[(b, a)] = r;
            sum += 2.0 * r.abs();
        }
    }
    Ok(PearsonReport {
        mean_abs_offdiag: sum / (m * (m - 1)) as f64,
        matrix,
        nodes,
        constant_rows: constant.iter().filter(|&&c| c).count(),
    })
}
