use serde::{Deserialize, Serialize};

use crate::error::{Result, SgclError};
use crate::numerics::DenseMatrix;

/// Which direction the cosine objective pushes positive pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossSign {
    MaximizeSimilarity,
    MinimizeSimilarity,
}

const ROW_GUARD: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct CosineLoss {
    pub loss: f64,
    /// `∂L/∂Z`. The target receives no gradient.
    pub grad: DenseMatrix,
    /// Rows skipped because a prediction or target row had (near) zero norm.
    pub degenerate: usize,
}

/// `1 ∓ mean_i cos(Z_i, T_i)`: `−` when maximising similarity, `+` when
/// minimising it.
pub fn cosine_loss(z: &DenseMatrix, target: &DenseMatrix, sign: LossSign) -> Result<CosineLoss> {
    if z.shape() != target.shape() {
        return Err(SgclError::shape(
            "cosine_loss",
            format!("{:?} vs {:?}", z.shape(), target.shape()),
        ));
    }
    let n = z.rows();
    if n == 0 {
        return Err(SgclError::Usage("cosine loss over zero rows".into()));
    }
    let s = match sign {
        LossSign::MaximizeSimilarity => -1.0,
        LossSign::MinimizeSimilarity => 1.0,
    };
    let mut grad = DenseMatrix::zeros(n, z.cols());
    let mut cos_sum = 0.0;
    let mut degenerate = 0;
    for i in 0..n {
        let (zi, ti) = (z.row(i), target.row(i));
        let zn = zi.iter().map(|v| v * v).sum::<f64>().sqrt();
        let tn = ti.iter().map(|v| v * v).sum::<f64>().sqrt();
        if zn < ROW_GUARD || tn < ROW_GUARD {
            degenerate += 1;
            continue;
        }
        let cos = zi.iter().zip(ti).map(|(a, b)| a * b).sum::<f64>() / (zn * tn);
        cos_sum += cos;
        // ∂cos/∂z = t / (‖z‖‖t‖) − cos · z / ‖z‖²
        let g = grad.row_mut(i);
        for ((gj, &zj), &tj) in g.iter_mut().zip(zi).zip(ti) {
            *gj = s * (tj / (zn * tn) - cos * zj / (zn * zn)) / n as f64;
        }
    }
    Ok(CosineLoss {
        loss: 1.0 + s * cos_sum / n as f64,
        grad,
        degenerate,
    })
}
