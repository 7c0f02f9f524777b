//! Numeric substrate: dense row-major matrices, CSR sparse matrices,
//! Glorot initialisation, the AdamW optimizer and the binary matrix format.

mod dense;
mod init;
mod io;
mod optim;
mod sparse;

pub use dense::DenseMatrix;
pub use init::glorot_init;
pub use io::{read_matrix, read_matrix_file, write_matrix, write_matrix_file, MATRIX_MAGIC};
pub use optim::{adamw_step, OptimHyper, OptimState};
pub use sparse::CsrMatrix;

/// Work size (multiply-adds) below which kernels stay on the calling thread.
pub(crate) const PAR_THRESHOLD: usize = 1 << 15;
