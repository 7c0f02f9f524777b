//! Predictors mapping online representations onto target representations.
//!
//! The inferential predictor has no parameters: it is the covariance of the
//! centred, row-normalised target representations,
//! `P = H̄ᵀ H̄ / (N − 1)`, and the prediction is `Z = H P`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::{Activation, PRELU_INIT_SLOPE};
use crate::error::{Result, SgclError};
use crate::numerics::{glorot_init, DenseMatrix};

/// Rows whose centred norm falls below this are returned as zero rows.
pub const NORM_GUARD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum PredictorKind {
    Inferential,
    Mlp { hidden_dim: usize },
    Identity,
}

/// Symmetric positive semidefinite `d × d` predictor.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictorMatrix(DenseMatrix);

impl PredictorMatrix {
    pub fn identity(d: usize) -> Self {
        Self(DenseMatrix::identity(d))
    }

    pub fn values(&self) -> &DenseMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }
}

/// Output of [`center_and_normalize`].
#[derive(Clone, Debug, PartialEq)]
pub struct CenteredRows {
    pub rows: DenseMatrix,
    /// Rows that vanished after centring and were left at zero.
    pub degenerate: usize,
}

/// Subtracts the column mean from every row, then scales each row to unit
/// Euclidean norm.
pub fn center_and_normalize(h: &DenseMatrix) -> Result<CenteredRows> {
    if h.rows() < 2 {
        return Err(SgclError::Usage(format!(
            "centering needs at least 2 rows, got {}",
            h.rows()
        )));
    }
    let mean = h.column_means();
    let mut out = DenseMatrix::zeros(h.rows(), h.cols());
    let mut degenerate = 0;
    for i in 0..h.rows() {
        let row = out.row_mut(i);
        for ((o, x), m) in row.iter_mut().zip(h.row(i)).zip(&mean) {
            *o = x - m;
        }
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < NORM_GUARD {
            row.fill(0.0);
            degenerate += 1;
        } else {
            row.iter_mut().for_each(|v| *v /= norm);
        }
    }
    Ok(CenteredRows {
        rows: out,
        degenerate,
    })
}

/// `H̄ᵀ H̄ / (N − 1)`.
pub fn inferential_predictor(h_bar: &DenseMatrix) -> Result<PredictorMatrix> {
    let n = h_bar.rows();
    if n < 2 {
        return Err(SgclError::Usage(format!(
            "inferential predictor needs at least 2 rows, got {n}"
        )));
    }
    let mut gram = h_bar.t_matmul(h_bar)?;
    let scale = 1.0 / (n - 1) as f64;
    gram.as_mut_slice().iter_mut().for_each(|v| *v *= scale);
    // exact symmetry despite summation order
    let d = gram.cols();
    for i in 0..d {
        for j in (i + 1)..d {
            let v = 0.5 * (gram[(i, j)] + gram[(j, i)]);
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    Ok(PredictorMatrix(gram))
}

/// `Z = H P`.
pub fn predict(h: &DenseMatrix, p: &PredictorMatrix) -> Result<DenseMatrix> {
    if h.cols() != p.dim() {
        return Err(SgclError::shape(
            "predict",
            format!("{} columns against a {}x{} predictor", h.cols(), p.dim(), p.dim()),
        ));
    }
    h.matmul(&p.0)
}

/// `∂L/∂H = (∂L/∂Z) Pᵀ`; `P` is a constant of the step.
pub fn predict_backward(d_z: &DenseMatrix, p: &PredictorMatrix) -> Result<DenseMatrix> {
    d_z.matmul_t(&p.0)
}

/// One-hidden-layer MLP predictor `d → hidden → d`.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    pub w1: DenseMatrix,
    pub b1: Vec<f64>,
    pub w2: DenseMatrix,
    pub b2: Vec<f64>,
    pub prelu_slope: f64,
}

#[derive(Clone, Debug)]
pub struct MlpTrace {
    input: DenseMatrix,
    pre_activation: DenseMatrix,
    hidden: DenseMatrix,
    activation: Activation,
}

impl MlpParams {
    pub fn init(dim: usize, hidden_dim: usize, rng: &mut impl Rng) -> Result<Self> {
        Ok(Self {
            w1: glorot_init(dim, hidden_dim, rng)?,
            b1: vec![0.0; hidden_dim],
            w2: glorot_init(hidden_dim, dim, rng)?,
            b2: vec![0.0; dim],
            prelu_slope: PRELU_INIT_SLOPE,
        })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            w1: DenseMatrix::zeros(self.w1.rows(), self.w1.cols()),
            b1: vec![0.0; self.b1.len()],
            w2: DenseMatrix::zeros(self.w2.rows(), self.w2.cols()),
            b2: vec![0.0; self.b2.len()],
            prelu_slope: 0.0,
        }
    }

    pub fn named_buffers(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("mlp.w1", self.w1.as_slice()),
            ("mlp.b1", &self.b1),
            ("mlp.w2", self.w2.as_slice()),
            ("mlp.b2", &self.b2),
            ("mlp.prelu.slope", std::slice::from_ref(&self.prelu_slope)),
        ]
    }

    pub fn named_buffers_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![
            ("mlp.w1", self.w1.as_mut_slice()),
            ("mlp.b1", &mut self.b1),
            ("mlp.w2", self.w2.as_mut_slice()),
            ("mlp.b2", &mut self.b2),
            ("mlp.prelu.slope", std::slice::from_mut(&mut self.prelu_slope)),
        ]
    }

    pub fn num_parameters(&self) -> usize {
        self.named_buffers().iter().map(|(_, b)| b.len()).sum()
    }
}

pub fn mlp_predict_forward(
    params: &MlpParams,
    h: &DenseMatrix,
    activation: Activation,
) -> Result<(DenseMatrix, MlpTrace)> {
    if h.cols() != params.w1.rows() || params.w2.cols() != params.w1.rows() {
        return Err(SgclError::shape(
            "mlp_predict_forward",
            format!("input width {} for a {}→{}→{} MLP", h.cols(), params.w1.rows(), params.w1.cols(), params.w2.cols()),
        ));
    }
    let mut pre = h.matmul(&params.w1)?;
    pre.add_row_vector(&params.b1)?;
    let hidden = match activation {
        Activation::Identity => pre.clone(),
        Activation::Relu => pre.map(|v| v.max(0.0)),
        Activation::Prelu => pre.map(|v| if v > 0.0 { v } else { params.prelu_slope * v }),
    };
    let mut z = hidden.matmul(&params.w2)?;
    z.add_row_vector(&params.b2)?;
    Ok((
        z,
        MlpTrace {
            input: h.clone(),
            pre_activation: pre,
            hidden,
            activation,
        },
    ))
}

/// Returns `(parameter gradients, ∂L/∂H)`.
pub fn mlp_predict_backward(
    params: &MlpParams,
    trace: &MlpTrace,
    d_z: &DenseMatrix,
) -> Result<(MlpParams, DenseMatrix)> {
    let w2 = trace.hidden.t_matmul(d_z)?;
    let b2 = d_z.column_sums();
    let d_hidden = d_z.matmul_t(&params.w2)?;
    let pre = &trace.pre_activation;
    let mut slope = 0.0;
    let d_pre = match trace.activation {
        Activation::Identity => d_hidden,
        Activation::Relu => DenseMatrix::from_fn(pre.rows(), pre.cols(), |i, j| {
            if pre[(i, j)] > 0.0 {
                d_hidden[(i, j)]
            } else {
                0.0
            }
        }),
        Activation::Prelu => DenseMatrix::from_fn(pre.rows(), pre.cols(), |i, j| {
            let (p, u) = (pre[(i, j)], d_hidden[(i, j)]);
            if p > 0.0 {
                u
            } else {
                slope += u * p;
                params.prelu_slope * u
            }
        }),
    };
    let w1 = trace.input.t_matmul(&d_pre)?;
    let b1 = d_pre.column_sums();
    let d_h = d_pre.matmul_t(&params.w1)?;
    Ok((
        MlpParams {
            w1,
            b1,
            w2,
            b2,
            prelu_slope: slope,
        },
        d_h,
    ))
}
