use rand::Rng;

use super::DenseMatrix;
use crate::error::{Result, SgclError};

/// Glorot/Xavier uniform initialisation on `[-a, a]`, `a = sqrt(6 / (rows + cols))`.
pub fn glorot_init(rows: usize, cols: usize, rng: &mut impl Rng) -> Result<DenseMatrix> {
    if rows == 0 || cols == 0 {
        return Err(SgclError::Config(format!(
            "glorot_init needs positive dimensions, got {rows}x{cols}"
        )));
    }
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-bound..=bound))
        .collect();
    DenseMatrix::from_vec(rows, cols, data)
}
