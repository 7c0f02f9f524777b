//! Teacher–student dynamics of a linear predictor.
//!
//! The teacher is the identity map and the input is the representation
//! matrix `H`, so the input–output covariance is `Σ = HᵀH / (N − 1)`. The
//! student `W_p = W_out · W_in` is trained by full-batch gradient descent on
//! the whitened-input squared error `½‖Σ − W_out W_in‖²_F`. From the aligned
//! initialisation `W_out = √ε Û`, `W_in = √ε V̂ᵀ` every mode evolves on its own
//! along the logistic curve of [`ts_logistic`] and `W_p → Σ`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SgclError};
use crate::numerics::DenseMatrix;

/// `s(t, ŝ) = ŝ e^{2ŝt/ω} / (e^{2ŝt/ω} − 1 + ŝ/ω)`, evaluated as printed.
pub fn ts_closed_form(s_hat: f64, omega: f64, t: f64) -> f64 {
    let e = (2.0 * s_hat * t / omega).exp();
    if e.is_infinite() {
        return s_hat;
    }
    s_hat * e / (e - 1.0 + s_hat / omega)
}

/// Logistic mode trajectory started from `s0`:
/// `ŝ e^{2ŝ·lr·t} / (e^{2ŝ·lr·t} − 1 + ŝ/s0)`. Equals `s0` at `t = 0`.
pub fn ts_logistic(s_hat: f64, s0: f64, learning_rate: f64, t: f64) -> f64 {
    let e = (2.0 * s_hat * learning_rate * t).exp();
    if e.is_infinite() {
        return s_hat;
    }
    s_hat * e / (e - 1.0 + s_hat / s0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TsDynamicsConfig {
    /// Initial singular value of the student.
    pub epsilon: f64,
    pub learning_rate: f64,
    pub steps: usize,
    /// Keep one trajectory record every this many steps (the last step is always kept).
    pub record_every: usize,
}

impl Default for TsDynamicsConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            learning_rate: 1.0,
            steps: 4000,
            record_every: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TsRecord {
    pub step: usize,
    pub w_p: DenseMatrix,
    /// `‖W_p − Σ‖_F / ‖Σ‖_F`.
    pub rel_distance: f64,
    /// Descending.
    pub singular_values: Vec<f64>,
    /// Largest angle (radians) between `W_p v̂_i` and `û_i`.
    pub vector_deviation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TsTrajectory {
    pub sigma: DenseMatrix,
    /// Descending singular values of `Σ`.
    pub teacher_spectrum: Vec<f64>,
    /// Columns are the singular vectors `û_i` (equal to `v̂_i` for the PSD `Σ`).
    pub singular_vectors: DenseMatrix,
    pub records: Vec<TsRecord>,
}

impl TsTrajectory {
    pub fn last(&self) -> &TsRecord {
        self.records.last().expect("at least the initial record")
    }

    pub fn max_vector_deviation(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.vector_deviation)
            .fold(0.0, f64::max)
    }
}

fn to_na(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

/// Eigen-decomposition of a symmetric PSD matrix, eigenvalues descending and
/// clamped at zero. Returns `(values, vectors as columns)`.
pub fn symmetric_spectrum(sym: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let eig = SymmetricEigen::new(to_na(sym));
    let d = sym.rows();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).expect("finite"));
    let values = order.iter().map(|&k| eig.eigenvalues[k].max(0.0)).collect();
    let vectors = DenseMatrix::from_fn(d, d, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

fn singular_values(m: &DenseMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = to_na(m).singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    s
}

/// Largest angle between `W v_i` and `u_i` over the columns of `vectors`.
/// Zero when `W` keeps every singular direction.
pub fn angular_deviation(w: &DenseMatrix, vectors: &DenseMatrix) -> f64 {
    let wv = w.matmul(vectors).expect("square");
    let mut worst: f64 = 0.0;
    for i in 0..vectors.cols() {
        let col = wv.column(i);
        let u = vectors.column(i);
        let par: f64 = col.iter().zip(&u).map(|(a, b)| a * b).sum();
        let perp = col
            .iter()
            .zip(&u)
            .map(|(a, b)| (a - par * b).powi(2))
            .sum::<f64>()
            .sqrt();
        if par.abs() + perp == 0.0 {
            continue;
        }
        worst = worst.max(perp.atan2(par.abs()));
    }
    worst
}

/// Simulates the student from `ε Û V̂ᵀ` and records its distance to `Σ`,
/// its spectrum and how far its singular directions drift.
pub fn ts_simulate(h: &DenseMatrix, config: &TsDynamicsConfig) -> Result<TsTrajectory> {
    let positive = config.epsilon > 0.0 && config.learning_rate > 0.0;
    if !positive {
        return Err(SgclError::Config(format!(
            "dynamics need epsilon > 0 and learning_rate > 0, got {config:?}"
        )));
    }
    if config.record_every == 0 {
        return Err(SgclError::Config("record_every must be positive".into()));
    }
    let (n, d) = h.shape();
    if n < 2 || d == 0 {
        return Err(SgclError::Usage(format!("dynamics need N >= 2 and d >= 1, got {n}x{d}")));
    }
    for (i, row) in h.row_iter().enumerate() {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 && (norm - 1.0).abs() > 1e-9 {
            return Err(SgclError::Usage(format!(
                "row {i} of H has norm {norm}; rows must be l2-normalised"
            )));
        }
    }

    // teacher = identity, so Σ_yx = Hᵀ H / (N − 1)
    let sigma = h.t_matmul(h)?.scale(1.0 / (n - 1) as f64);
    let sigma_norm = sigma.frobenius_norm();
    if sigma_norm == 0.0 {
        return Err(SgclError::Usage("Σ is zero".into()));
    }
    let (teacher_spectrum, u) = symmetric_spectrum(&sigma);

    let root = config.epsilon.sqrt();
    let mut w_out = u.scale(root);
    let mut w_in = u.transpose().scale(root);
    let lr = config.learning_rate;

    let record = |step: usize, w_out: &DenseMatrix, w_in: &DenseMatrix| -> Result<TsRecord> {
        let w_p = w_out.matmul(w_in)?;
        let rel_distance = w_p.sub(&sigma)?.frobenius_norm() / sigma_norm;
        Ok(TsRecord {
            step,
            rel_distance,
            singular_values: singular_values(&w_p),
            vector_deviation: angular_deviation(&w_p, &u),
            w_p,
        })
    };

    let mut records = vec![record(0, &w_out, &w_in)?];
    let mut previous = records[0].rel_distance;
    let initial = previous;
    let mut rising = 0usize;
    for step in 1..=config.steps {
        let err = sigma.sub(&w_out.matmul(&w_in)?)?;
        // ∂L/∂W_out = −E W_inᵀ,  ∂L/∂W_in = −W_outᵀ E
        let g_out = err.matmul_t(&w_in)?;
        let g_in = w_out.t_matmul(&err)?;
        w_out = w_out.add(&g_out.scale(lr))?;
        w_in = w_in.add(&g_in.scale(lr))?;

        let w_p = w_out.matmul(&w_in)?;
        let dist = w_p.sub(&sigma)?.frobenius_norm() / sigma_norm;
        let diverged = |reason: String| SgclError::Divergence {
            step,
            learning_rate: lr,
            reason,
        };
        if !dist.is_finite() || !w_p.is_finite() {
            return Err(diverged("non-finite student weights".into()));
        }
        if dist > 1e6 * initial.max(1.0) {
            return Err(diverged(format!("relative distance exploded to {dist:e}")));
        }
        rising = if dist > previous { rising + 1 } else { 0 };
        if rising >= 100 {
            return Err(diverged("relative distance rose for 100 consecutive steps".into()));
        }
        previous = dist;
        if step % config.record_every == 0 || step == config.steps {
            records.push(record(step, &w_out, &w_in)?);
        }
    }
    Ok(TsTrajectory {
        sigma,
        teacher_spectrum,
        singular_vectors: u,
        records,
    })
}
