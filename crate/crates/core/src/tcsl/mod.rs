//! Tiled-CSL: tile-local sparse weight storage.
//!
//! The weight matrix is cut into `m_tb x k_tb` tiles, visited row-major over
//! the tile grid. Each tile stores its nonzeros as packed 32-bit entries,
//! value bits in the high half and the in-tile location `x * k_tb + y` in
//! the low half. `tile_offsets` is the prefix sum of per-tile entry counts.
//! Every tile holds a multiple of 32 entries; short tiles are padded with
//! zero-valued entries aimed at zero positions.

mod codec;
mod io;

use serde::Serialize;

pub use codec::{decode, encode, encode_tile};
pub use io::{deserialize, serialize, HEADER_BYTES, MAGIC, VERSION};

use crate::config::{div_ceil, TileConfig};
use crate::error::TcslError;
use crate::half::HalfBits;

/// Entries per store group; one warp writes one group.
pub const GROUP_SIZE: usize = 32;
/// Shared-memory banks.
pub const NUM_BANKS: usize = 32;

/// Packed `(value_bits << 16) | location`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct TcslEntry(pub u32);

impl TcslEntry {
    #[inline]
    pub const fn new(value: HalfBits, location: u16) -> Self {
        TcslEntry(((value.0 as u32) << 16) | location as u32)
    }

    #[inline]
    pub const fn pad(location: u16) -> Self {
        TcslEntry(location as u32)
    }

    #[inline]
    pub const fn value(self) -> HalfBits {
        HalfBits((self.0 >> 16) as u16)
    }

    #[inline]
    pub const fn location(self) -> u16 {
        (self.0 & 0xFFFF) as u16
    }

    /// `(row, col)` inside a tile with `k_tb` columns.
    #[inline]
    pub const fn coords(self, k_tb: usize) -> (usize, usize) {
        let loc = self.location() as usize;
        (loc / k_tb, loc % k_tb)
    }
}

impl std::fmt::Debug for TcslEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "TcslEntry({:#06x}@{})", self.value().0, self.location())
    }
}

/// Shared-memory bank in `[0, 32)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct BankId(pub u8);

/// Bank of in-tile element `(x, y)`: `(x % 8) * 4 + (y % 8) / 2`.
#[inline]
pub const fn bank_of(x: usize, y: usize) -> BankId {
    BankId(((x % 8) * 4 + (y % 8) / 2) as u8)
}

/// Checked [`bank_of`].
pub fn bank_id(x: usize, y: usize, cfg: &TileConfig) -> Result<BankId, TcslError> {
    if x >= cfg.m_tb || y >= cfg.k_tb {
        return Err(TcslError::CoordinateOutOfRange {
            x,
            y,
            m_tb: cfg.m_tb,
            k_tb: cfg.k_tb,
        });
    }
    Ok(bank_of(x, y))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TcslMatrix {
    m: usize,
    k: usize,
    m_tb: usize,
    k_tb: usize,
    tile_offsets: Vec<u32>,
    entries: Vec<TcslEntry>,
    reordered: bool,
}

impl TcslMatrix {
    /// Assemble and validate.
    pub fn from_parts(
        m: usize,
        k: usize,
        m_tb: usize,
        k_tb: usize,
        tile_offsets: Vec<u32>,
        entries: Vec<TcslEntry>,
        reordered: bool,
    ) -> Result<Self, TcslError> {
        let t = Self::from_parts_unchecked(m, k, m_tb, k_tb, tile_offsets, entries, reordered);
        t.validate()?;
        Ok(t)
    }

    /// Assemble without any structural checks.
    pub fn from_parts_unchecked(
        m: usize,
        k: usize,
        m_tb: usize,
        k_tb: usize,
        tile_offsets: Vec<u32>,
        entries: Vec<TcslEntry>,
        reordered: bool,
    ) -> Self {
        TcslMatrix {
            m,
            k,
            m_tb,
            k_tb,
            tile_offsets,
            entries,
            reordered,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m_tb(&self) -> usize {
        self.m_tb
    }

    pub fn k_tb(&self) -> usize {
        self.k_tb
    }

    pub fn is_reordered(&self) -> bool {
        self.reordered
    }

    pub fn tile_offsets(&self) -> &[u32] {
        &self.tile_offsets
    }

    pub fn entries(&self) -> &[TcslEntry] {
        &self.entries
    }

    /// Tiles along M.
    pub fn tile_rows(&self) -> usize {
        div_ceil(self.m, self.m_tb)
    }

    /// Tiles along K.
    pub fn tile_cols(&self) -> usize {
        div_ceil(self.k, self.k_tb)
    }

    pub fn num_tiles(&self) -> usize {
        self.tile_rows() * self.tile_cols()
    }

    pub fn tile_elems(&self) -> usize {
        self.m_tb * self.k_tb
    }

    /// Row-major tile index of grid cell `(i, j)`.
    #[inline]
    pub fn tile_index(&self, i: usize, j: usize) -> usize {
        i * self.tile_cols() + j
    }

    /// Entries of tile `t`. Panics if `t` is out of range.
    pub fn tile_entries(&self, t: usize) -> &[TcslEntry] {
        let lo = self.tile_offsets[t] as usize;
        let hi = self.tile_offsets[t + 1] as usize;
        &self.entries[lo..hi]
    }

    pub fn tiles(&self) -> impl Iterator<Item = &[TcslEntry]> + '_ {
        (0..self.num_tiles()).map(move |t| self.tile_entries(t))
    }

    /// Tile configuration carrying this matrix's tile geometry.
    pub fn tile_config(&self, n: usize) -> TileConfig {
        TileConfig::for_n(n).with_tile(self.m_tb, self.k_tb)
    }

    /// Entries holding a nonzero value.
    pub fn nnz(&self) -> usize {
        self.entries.iter().filter(|e| !e.value().is_zero()).count()
    }

    /// Check every structural invariant.
    pub fn validate(&self) -> Result<(), TcslError> {
        TileConfig::default()
            .with_tile(self.m_tb, self.k_tb)
            .validate()?;
        let tiles = self.num_tiles();
        if self.tile_offsets.len() != tiles + 1 {
            return Err(TcslError::TileCount {
                expected: tiles,
                found: self.tile_offsets.len().saturating_sub(1),
            });
        }
        if self.tile_offsets[0] != 0 {
            return Err(TcslError::InconsistentOffsets(format!(
                "first offset is {}, expected 0",
                self.tile_offsets[0]
            )));
        }
        if let Some(t) = self.tile_offsets.windows(2).position(|w| w[1] < w[0]) {
            return Err(TcslError::InconsistentOffsets(format!(
                "offsets decrease between tiles {t} and {}",
                t + 1
            )));
        }
        if self.tile_offsets[tiles] as usize != self.entries.len() {
            return Err(TcslError::InconsistentOffsets(format!(
                "last offset {} but {} entries",
                self.tile_offsets[tiles],
                self.entries.len()
            )));
        }

        let cap = self.tile_elems();
        // last-writer stamp per location: (tile + 1, value bits)
        let mut seen: Vec<(u32, u16)> = vec![(0, 0); cap];
        for t in 0..tiles {
            let entries = self.tile_entries(t);
            if !entries.len().is_multiple_of(GROUP_SIZE) {
                return Err(TcslError::UnpaddedTile {
                    tile: t,
                    count: entries.len(),
                });
            }
            let (ti, tj) = (t / self.tile_cols(), t % self.tile_cols());
            let stamp = t as u32 + 1;
            for (idx, e) in entries.iter().enumerate() {
                let loc = e.location();
                if loc as usize >= cap {
                    return Err(TcslError::LocationOutOfRange {
                        index: self.tile_offsets[t] as usize + idx,
                        location: loc,
                        capacity: cap,
                    });
                }
                let value = e.value().normalize_zero().0;
                let (x, y) = e.coords(self.k_tb);
                if value != 0 && (ti * self.m_tb + x >= self.m || tj * self.k_tb + y >= self.k) {
                    return Err(TcslError::EntryInPadding { tile: t, location: loc });
                }
                let slot = &mut seen[loc as usize];
                if slot.0 == stamp && slot.1 != value {
                    return Err(TcslError::ConflictingEntries { tile: t, location: loc });
                }
                *slot = (stamp, value);
            }
        }
        Ok(())
    }

    /// Byte accounting of the serialized form.
    pub fn footprint(&self) -> Footprint {
        Footprint::new(self.entries.len(), self.num_tiles(), self.m, self.k)
    }

    /// Total serialized size in bytes.
    pub fn footprint_bytes(&self) -> usize {
        self.footprint().total_bytes
    }
}

/// Byte accounting for a Tiled-CSL matrix against its dense binary16 form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Footprint {
    pub entry_bytes: usize,
    pub offset_bytes: usize,
    pub header_bytes: usize,
    pub total_bytes: usize,
    pub dense_bytes: usize,
    /// `total_bytes / dense_bytes`
    pub ratio: f64,
}

impl Footprint {
    pub fn new(entries: usize, tiles: usize, m: usize, k: usize) -> Self {
        let entry_bytes = 4 * entries;
        let offset_bytes = 4 * (tiles + 1);
        let total_bytes = entry_bytes + offset_bytes + HEADER_BYTES;
        let dense_bytes = 2 * m * k;
        let ratio = if dense_bytes == 0 {
            f64::INFINITY
        } else {
            total_bytes as f64 / dense_bytes as f64
        };
        Footprint {
            entry_bytes,
            offset_bytes,
            header_bytes: HEADER_BYTES,
            total_bytes,
            dense_bytes,
            ratio,
        }
    }

    /// Encoded form is no smaller than dense.
    pub fn no_saving(&self) -> bool {
        self.ratio >= 1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bank_formula() {
        let cfg = TileConfig::default();
        assert_eq!(bank_id(0, 0, &cfg).unwrap(), BankId(0));
        assert_eq!(bank_id(7, 7, &cfg).unwrap(), BankId(31));
        assert_eq!(bank_id(3, 9, &cfg).unwrap(), BankId(12));
        assert!(bank_id(128, 0, &cfg).is_err());
        assert!(bank_id(0, 64, &cfg).is_err());
    }

    #[test]
    fn entry_packing() {
        let e = TcslEntry::new(HalfBits(0x4000), 66);
        assert_eq!(e.0, 0x4000_0042);
        assert_eq!(e.value(), HalfBits(0x4000));
        assert_eq!(e.location(), 66);
        assert_eq!(e.coords(64), (1, 2));
    }

    fn one_tile(offsets: Vec<u32>, entries: Vec<TcslEntry>) -> TcslMatrix {
        TcslMatrix::from_parts_unchecked(128, 64, 128, 64, offsets, entries, false)
    }

    fn pads(n: usize, start: u16) -> Vec<TcslEntry> {
        (0..n as u16).map(|i| TcslEntry::pad(start + i)).collect()
    }

    #[test]
    fn validate_catches_offset_errors() {
        let t = one_tile(vec![0, 32], pads(31, 0));
        assert!(matches!(t.validate(), Err(TcslError::InconsistentOffsets(_))));
        let t = one_tile(vec![1, 32], pads(32, 0));
        assert!(matches!(t.validate(), Err(TcslError::InconsistentOffsets(_))));
        let t = one_tile(vec![0, 16, 32], pads(32, 0));
        assert!(matches!(t.validate(), Err(TcslError::TileCount { .. })));
    }

    #[test]
    fn validate_catches_entry_errors() {
        let t = one_tile(vec![0, 16], pads(16, 0));
        assert!(matches!(t.validate(), Err(TcslError::UnpaddedTile { .. })));

        let mut e = pads(32, 0);
        e[3] = TcslEntry::pad(8192);
        assert!(matches!(
            one_tile(vec![0, 32], e).validate(),
            Err(TcslError::LocationOutOfRange { location: 8192, .. })
        ));

        let mut e = pads(32, 100);
        e[0] = TcslEntry::new(HalfBits::ONE, 5);
        e[1] = TcslEntry::new(HalfBits(0x4000), 5);
        assert!(matches!(
            one_tile(vec![0, 32], e).validate(),
            Err(TcslError::ConflictingEntries { location: 5, .. })
        ));

        // 100x64 matrix in a 128x64 tile: row 100 is padding
        let mut e = pads(32, 0);
        e[0] = TcslEntry::new(HalfBits::ONE, 100 * 64);
        let t = TcslMatrix::from_parts_unchecked(100, 64, 128, 64, vec![0, 32], e, false);
        assert!(matches!(t.validate(), Err(TcslError::EntryInPadding { .. })));
    }

    #[test]
    fn footprint_of_empty_tile() {
        let t = one_tile(vec![0, 0], vec![]);
        let f = t.footprint();
        assert_eq!(f.entry_bytes, 0);
        assert_eq!(f.offset_bytes, 8);
        assert_eq!(f.total_bytes, 8 + HEADER_BYTES);
        assert_eq!(f.dense_bytes, 2 * 128 * 64);
    }
}
