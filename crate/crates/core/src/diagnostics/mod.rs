//! Numerical checks of the representation-level claims: alignment between
//! online and target representations, node-level decorrelation,
//! eigenvector membership under the predictor, and teacher–student
//! predictor dynamics.

mod alignment;
mod dynamics;
mod eigen;
mod pearson;

pub use alignment::{alignment_stats, AlignmentStats};
pub use dynamics::{
    angular_deviation, symmetric_spectrum, ts_closed_form, ts_logistic, ts_simulate, TsDynamicsConfig,
    TsRecord, TsTrajectory,
};
pub use eigen::{eigen_alignment_residual, EigenResiduals};
pub use pearson::{pearson_offdiag, PearsonReport, DEFAULT_MAX_NODES};

/// Rows with a Euclidean norm below this are treated as degenerate.
pub const DEGENERATE_NORM: f64 = 1e-12;

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Median of the finite values; `None` when there are none.
pub fn median(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}
