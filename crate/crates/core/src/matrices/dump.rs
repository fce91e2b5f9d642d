//! Binary matrix dump for debugging cross-checks.
//!
//! Layout: `KGRM`, u32 dimension, u32 flags, 4 reserved zero bytes, then the
//! matrix row-major as little-endian `(re, im)` pairs. Flag bit 0 set means the
//! pairs are f64; clear means f32.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const DUMP_MAGIC: &[u8; 4] = b"KGRM";
const FLAG_F64: u32 = 1;

pub fn write_matrix_dump<W: Write>(mut w: W, m: &DMatrix<Complex64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidInput("matrix dump needs a square matrix".into()));
    }
    let dim = u32::try_from(m.nrows())
        .map_err(|_| Error::InvalidInput("matrix too large to dump".into()))?;
    let mut buf = Vec::with_capacity(16 + 16 * m.len());
    buf.extend_from_slice(DUMP_MAGIC);
    buf.extend_from_slice(&dim.to_le_bytes());
    buf.extend_from_slice(&FLAG_F64.to_le_bytes());
    buf.extend_from_slice(&[0u8; 4]);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_matrix_dump<R: Read>(mut r: R) -> Result<DMatrix<Complex64>> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    if &header[..4] != DUMP_MAGIC {
        return Err(Error::Header {
            field: "magic".into(),
            message: "expected KGRM".into(),
        });
    }
    let dim = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let flags = u32::from_le_bytes(header[8..12].try_into().unwrap());
    let wide = flags & FLAG_F64 != 0;
    let width = if wide { 8 } else { 4 };
    let mut body = vec![0u8; dim * dim * 2 * width];
    r.read_exact(&mut body)?;
    let scalar = |k: usize| -> f64 {
        let bytes = &body[k * width..(k + 1) * width];
        if wide {
            f64::from_le_bytes(bytes.try_into().unwrap())
        } else {
            f32::from_le_bytes(bytes.try_into().unwrap()) as f64
        }
    };
    Ok(DMatrix::from_fn(dim, dim, |i, j| {
        let k = 2 * (i * dim + j);
        Complex64::new(scalar(k), scalar(k + 1))
    }))
}
