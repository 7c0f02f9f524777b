use super::{dot, norm, DEGENERATE_NORM};
use crate::error::{Result, SgclError};
use crate::numerics::DenseMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct AlignmentStats {
    /// Mean row-wise cosine similarity.
    pub s_bar: f64,
    /// Mean row-wise Euclidean distance.
    pub d_bar: f64,
    /// `‖H1_i‖ / ‖H2_i‖`, `None` for excluded rows.
    pub length_ratios: Vec<Option<f64>>,
    /// Rows excluded because either side had (near) zero norm.
    pub degenerate: usize,
}

/// Cosine / distance agreement between two representations of the same nodes.
pub fn alignment_stats(h1: &DenseMatrix, h2: &DenseMatrix) -> Result<AlignmentStats> {
    if h1.shape() != h2.shape() {
        return Err(SgclError::shape(
            "alignment_stats",
            format!("{:?} vs {:?}", h1.shape(), h2.shape()),
        ));
    }
    let (mut s_sum, mut d_sum, mut used) = (0.0, 0.0, 0usize);
    let mut ratios = Vec::with_capacity(h1.rows());
    for (a, b) in h1.row_iter().zip(h2.row_iter()) {
        let (na, nb) = (norm(a), norm(b));
        if na < DEGENERATE_NORM || nb < DEGENERATE_NORM {
            ratios.push(None);
            continue;
        }
        s_sum += dot(a, b) / (na * nb);
        d_sum += a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        ratios.push(Some(na / nb));
        used += 1;
    }
    if used == 0 {
        return Err(SgclError::EmptyStatistics);
    }
    Ok(AlignmentStats {
        s_bar: s_sum / used as f64,
        d_bar: d_sum / used as f64,
        length_ratios: ratios,
        degenerate: h1.rows() - used,
    })
}
