//! Little-endian TCSL container.
//!
//! ```text
//! "TCSL" | u16 version | u16 flags (bit0 = reordered)
//! u32 m | u32 k | u32 m_tb | u32 k_tb | u32 num_tiles
//! u32 tile_offsets[num_tiles + 1]
//! u32 entries[tile_offsets[num_tiles]]
//! ```

use super::{TcslEntry, TcslMatrix};
use crate::error::{FormatError, TcslError};

pub const MAGIC: [u8; 4] = *b"TCSL";
pub const VERSION: u16 = 1;
pub const HEADER_BYTES: usize = 4 + 2 + 2 + 5 * 4;
const FLAG_REORDERED: u16 = 1;

pub fn serialize(t: &TcslMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(t.footprint_bytes());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let flags = if t.is_reordered() { FLAG_REORDERED } else { 0 };
    out.extend_from_slice(&flags.to_le_bytes());
    for v in [t.m(), t.k(), t.m_tb(), t.k_tb(), t.num_tiles()] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for &o in t.tile_offsets() {
        out.extend_from_slice(&o.to_le_bytes());
    }
    for e in t.entries() {
        out.extend_from_slice(&e.0.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        if self.buf.len() - self.pos < n {
            return Err(FormatError::Truncated {
                needed: self.pos + n,
                available: self.buf.len(),
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, FormatError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

pub fn deserialize(bytes: &[u8]) -> Result<TcslMatrix, FormatError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let found: [u8; 4] = r.take(4)?.try_into().unwrap();
    if found != MAGIC {
        return Err(FormatError::BadMagic {
            expected: MAGIC,
            found,
        });
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let flags = r.u16()?;
    let m = r.u32()? as usize;
    let k = r.u32()? as usize;
    let m_tb = r.u32()? as usize;
    let k_tb = r.u32()? as usize;
    let num_tiles = r.u32()? as usize;

    crate::config::TileConfig::default()
        .with_tile(m_tb, k_tb)
        .validate()
        .map_err(TcslError::from)?;
    let expected_tiles = crate::config::div_ceil(m, m_tb) * crate::config::div_ceil(k, k_tb);
    if num_tiles != expected_tiles {
        return Err(TcslError::TileCount {
            expected: expected_tiles,
            found: num_tiles,
        }
        .into());
    }

    let offsets: Vec<u32> = (0..=num_tiles).map(|_| r.u32()).collect::<Result<_, _>>()?;
    let declared = offsets[num_tiles] as usize;
    let rest = r.remaining();
    if !rest.is_multiple_of(4) {
        return Err(FormatError::Truncated {
            needed: bytes.len() + (4 - rest % 4),
            available: bytes.len(),
        });
    }
    if rest / 4 != declared {
        return Err(TcslError::InconsistentOffsets(format!(
            "last offset {declared} but payload holds {} entries",
            rest / 4
        ))
        .into());
    }
    let entries: Vec<TcslEntry> = (0..declared)
        .map(|_| r.u32().map(TcslEntry))
        .collect::<Result<_, _>>()?;
    let t = TcslMatrix::from_parts(m, k, m_tb, k_tb, offsets, entries, flags & FLAG_REORDERED != 0)?;
    Ok(t)
}
