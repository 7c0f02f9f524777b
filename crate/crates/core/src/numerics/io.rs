use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::DenseMatrix;
use crate::error::{Result, SgclError};

/// File signature of the binary matrix format.
pub const MATRIX_MAGIC: &[u8; 8] = b"SGCLMAT1";

/// Writes magic, `rows` and `cols` as little-endian `u64`, then the row-major
/// `f64` values in little-endian order.
pub fn write_matrix(w: &mut impl Write, m: &DenseMatrix) -> Result<()> {
    w.write_all(MATRIX_MAGIC)?;
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.cols() as u64).to_le_bytes())?;
    for v in m.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_matrix(r: &mut impl Read, origin: &str) -> Result<DenseMatrix> {
    let corrupt = |reason: &str| SgclError::Corrupt {
        path: origin.to_string(),
        reason: reason.to_string(),
    };
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| corrupt("truncated header"))?;
    if &magic != MATRIX_MAGIC {
        return Err(corrupt("bad magic"));
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word).map_err(|_| corrupt("truncated header"))?;
    let rows = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word).map_err(|_| corrupt("truncated header"))?;
    let cols = u64::from_le_bytes(word) as usize;
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| corrupt("dimension overflow"))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != len * 8 {
        return Err(corrupt(&format!(
            "expected {} payload bytes, found {}",
            len * 8,
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    DenseMatrix::from_vec(rows, cols, data)
}

pub fn write_matrix_file(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix(&mut w, m)?;
    w.flush()?;
    Ok(())
}

pub fn read_matrix_file(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let mut r = BufReader::new(File::open(path)?);
    read_matrix(&mut r, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layout_is_bit_exact() {
        let m = DenseMatrix::from_rows(&[[1.0, -2.5]]);
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m).unwrap();
        let mut expect = b"SGCLMAT1".to_vec();
        expect.extend_from_slice(&1u64.to_le_bytes());
        expect.extend_from_slice(&2u64.to_le_bytes());
        expect.extend_from_slice(&1.0f64.to_le_bytes());
        expect.extend_from_slice(&(-2.5f64).to_le_bytes());
        assert_eq!(buf, expect);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let mut buf = Vec::new();
        write_matrix(&mut buf, &DenseMatrix::filled(2, 2, 1.0)).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_matrix(&mut bad.as_slice(), "m"), Err(SgclError::Corrupt { .. })));
        buf.pop();
        assert!(matches!(read_matrix(&mut buf.as_slice(), "m"), Err(SgclError::Corrupt { .. })));
    }

    proptest! {
        #[test]
        fn roundtrip(rows in 0usize..6, cols in 0usize..6, seed in any::<u64>()) {
            use rand::Rng;
            let mut rng = crate::seeded_rng(seed);
            let m = DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1e3..1e3));
            let mut buf = Vec::new();
            write_matrix(&mut buf, &m).unwrap();
            prop_assert_eq!(read_matrix(&mut buf.as_slice(), "m").unwrap(), m);
        }
    }
}
