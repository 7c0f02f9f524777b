use super::{dot, norm, DEGENERATE_NORM};
use crate::error::{Result, SgclError};
use crate::numerics::DenseMatrix;
use crate::predictor::PredictorMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct EigenResiduals {
    /// Per node `(λ_i, residual_i)`; `None` for degenerate rows.
    pub per_node: Vec<Option<(f64, f64)>>,
    pub degenerate: usize,
}

impl EigenResiduals {
    pub fn median_residual(&self) -> Option<f64> {
        super::median(self.per_node.iter().flatten().map(|&(_, r)| r))
    }
}

/// Rayleigh quotient `λ_i = hᵀPh / hᵀh` and relative residual
/// `‖P h − λ_i h‖ / ‖h‖` for every node row `h`.
pub fn eigen_alignment_residual(p: &PredictorMatrix, h: &DenseMatrix) -> Result<EigenResiduals> {
    if h.cols() != p.dim() {
        return Err(SgclError::shape(
            "eigen_alignment_residual",
            format!("{} columns against a {}x{} predictor", h.cols(), p.dim(), p.dim()),
        ));
    }
    // rows of H Pᵀ are P h_i
    let ph = h.matmul_t(p.values())?;
    let mut per_node = Vec::with_capacity(h.rows());
    let mut degenerate = 0;
    for (row, prow) in h.row_iter().zip(ph.row_iter()) {
        let n = norm(row);
        if n < DEGENERATE_NORM {
            per_node.push(None);
            degenerate += 1;
            continue;
        }
        let lambda = dot(row, prow) / (n * n);
        let resid = row
            .iter()
            .zip(prow)
            .map(|(x, y)| (y - lambda * x).powi(2))
            .sum::<f64>()
            .sqrt()
            / n;
        per_node.push(Some((lambda, resid)));
    }
    Ok(EigenResiduals { per_node, degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::inferential_predictor;

    #[test]
    fn scaled_identity_has_zero_residual() {
        let p = inferential_predictor(&DenseMatrix::identity(3).scale(3.0f64.sqrt() * 2.0f64.sqrt())).unwrap();
        // (√6)² / 2 = 3 on the diagonal
        let h = DenseMatrix::from_fn(5, 3, |i, j| (i as f64 + 1.0) * (j as f64 - 0.3));
        let r = eigen_alignment_residual(&p, &h).unwrap();
        for (l, res) in r.per_node.iter().flatten() {
            assert!((l - 3.0).abs() < 1e-12);
            assert!(*res < 1e-12);
        }
    }

    #[test]
    fn constructed_eigenvector() {
        // P = Q diag(4, 1) Qᵀ with Q a rotation by 30°
        let (c, s) = (30f64.to_radians().cos(), 30f64.to_radians().sin());
        let rows = DenseMatrix::from_rows(&[[2.0 * c, 2.0 * s], [-s, c]]);
        let p = inferential_predictor(&rows.scale(1.0)).unwrap();
        let h = DenseMatrix::from_rows(&[[c * 7.0, s * 7.0], [-s, c], [0.0, 0.0]]);
        let r = eigen_alignment_residual(&p, &h).unwrap();
        let (l0, r0) = r.per_node[0].unwrap();
        let (l1, r1) = r.per_node[1].unwrap();
        assert!((l0 - 4.0).abs() < 1e-12 && r0 < 1e-12);
        assert!((l1 - 1.0).abs() < 1e-12 && r1 < 1e-12);
        assert_eq!(r.degenerate, 1);
    }
}
