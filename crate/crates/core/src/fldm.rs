//! Little-endian FLDM dense-matrix container.
//!
//! ```text
//! "FLDM" | u16 version | u16 dtype (0 = binary16, 1 = binary32)
//! u32 rows | u32 cols | row-major data
//! ```

use crate::error::FormatError;
use crate::half::HalfBits;
use crate::matrix::{DenseMatrix, OutputMatrix};

pub const MAGIC: [u8; 4] = *b"FLDM";
pub const VERSION: u16 = 1;
pub const HEADER_BYTES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u16)]
pub enum Dtype {
    Binary16 = 0,
    Binary32 = 1,
}

/// Contents of an FLDM file.
#[derive(Debug, Clone, PartialEq)]
pub enum Fldm {
    Half(DenseMatrix),
    Single(OutputMatrix<f32>),
}

impl Fldm {
    pub fn dtype(&self) -> Dtype {
        match self {
            Fldm::Half(_) => Dtype::Binary16,
            Fldm::Single(_) => Dtype::Binary32,
        }
    }
}

fn header(dtype: Dtype, rows: usize, cols: usize, payload: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_BYTES + payload);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(dtype as u16).to_le_bytes());
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    out.extend_from_slice(&(cols as u32).to_le_bytes());
    out
}

pub fn write_half(m: &DenseMatrix) -> Vec<u8> {
    let mut out = header(Dtype::Binary16, m.rows(), m.cols(), 2 * m.data().len());
    for v in m.data() {
        out.extend_from_slice(&v.0.to_le_bytes());
    }
    out
}

pub fn write_single(m: &OutputMatrix<f32>) -> Vec<u8> {
    let mut out = header(Dtype::Binary32, m.rows(), m.cols(), 4 * m.data().len());
    for v in m.data() {
        out.extend_from_slice(&v.to_bits().to_le_bytes());
    }
    out
}

pub fn write(f: &Fldm) -> Vec<u8> {
    match f {
        Fldm::Half(m) => write_half(m),
        Fldm::Single(m) => write_single(m),
    }
}

pub fn read(bytes: &[u8]) -> Result<Fldm, FormatError> {
    if bytes.len() < HEADER_BYTES {
        if bytes.len() >= 4 && bytes[..4] != MAGIC {
            return Err(FormatError::BadMagic {
                expected: MAGIC,
                found: bytes[..4].try_into().unwrap(),
            });
        }
        return Err(FormatError::Truncated {
            needed: HEADER_BYTES,
            available: bytes.len(),
        });
    }
    let found: [u8; 4] = bytes[..4].try_into().unwrap();
    if found != MAGIC {
        return Err(FormatError::BadMagic {
            expected: MAGIC,
            found,
        });
    }
    let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let version = u16_at(4);
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let dtype = match u16_at(6) {
        0 => Dtype::Binary16,
        1 => Dtype::Binary32,
        other => return Err(FormatError::UnknownDtype(other)),
    };
    let rows = u32_at(8) as usize;
    let cols = u32_at(12) as usize;
    let width = match dtype {
        Dtype::Binary16 => 2,
        Dtype::Binary32 => 4,
    };
    let payload = &bytes[HEADER_BYTES..];
    let needed = rows * cols * width;
    if payload.len() < needed {
        return Err(FormatError::Truncated {
            needed: HEADER_BYTES + needed,
            available: bytes.len(),
        });
    }
    if payload.len() > needed {
        return Err(FormatError::TrailingBytes(payload.len() - needed));
    }
    Ok(match dtype {
        Dtype::Binary16 => {
            let data = payload
                .chunks_exact(2)
                .map(|c| HalfBits(u16::from_le_bytes([c[0], c[1]])))
                .collect();
            Fldm::Half(DenseMatrix::new(rows, cols, data)?)
        }
        Dtype::Binary32 => {
            let data = payload
                .chunks_exact(4)
                .map(|c| f32::from_bits(u32::from_le_bytes(c.try_into().unwrap())))
                .collect();
            Fldm::Single(OutputMatrix::new(rows, cols, data)?)
        }
    })
}
