use serde::{Deserialize, Serialize};

use crate::error::MatrixError;

/// Thread-block tiling of a weight matrix.
///
/// A weight tile is `m_tb x k_tb`; each thread block produces an
/// `m_tb x n_tb` output tile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileConfig {
    pub m_tb: usize,
    pub k_tb: usize,
    pub n_tb: usize,
    pub threads_per_block: usize,
}

pub const DEFAULT_M_TB: usize = 128;
pub const DEFAULT_K_TB: usize = 64;
pub const DEFAULT_THREADS: usize = 128;

impl Default for TileConfig {
    fn default() -> Self {
        TileConfig {
            m_tb: DEFAULT_M_TB,
            k_tb: DEFAULT_K_TB,
            n_tb: 16,
            threads_per_block: DEFAULT_THREADS,
        }
    }
}

impl TileConfig {
    /// Default tiling for a product with `n` output columns.
    pub fn for_n(n: usize) -> Self {
        TileConfig {
            n_tb: n_tb_for(n),
            ..TileConfig::default()
        }
    }

    pub fn with_tile(mut self, m_tb: usize, k_tb: usize) -> Self {
        self.m_tb = m_tb;
        self.k_tb = k_tb;
        self
    }

    #[inline]
    pub fn tile_elems(&self) -> usize {
        self.m_tb * self.k_tb
    }

    /// Tile dims must be positive multiples of 8 and locations must fit in
    /// the 16-bit lane.
    pub fn validate(&self) -> Result<(), MatrixError> {
        let bad = |msg: String| Err(MatrixError::InvalidConfig(msg));
        if self.m_tb == 0 || !self.m_tb.is_multiple_of(8) {
            return bad(format!("m_tb={} must be a positive multiple of 8", self.m_tb));
        }
        if self.k_tb == 0 || !self.k_tb.is_multiple_of(8) {
            return bad(format!("k_tb={} must be a positive multiple of 8", self.k_tb));
        }
        if self.tile_elems() > 1 << 16 {
            return bad(format!(
                "{}x{} tile exceeds the 16-bit location range",
                self.m_tb, self.k_tb
            ));
        }
        if self.n_tb == 0 || self.threads_per_block == 0 {
            return bad("n_tb and threads_per_block must be positive".into());
        }
        Ok(())
    }
}

/// Output-tile width used for a product with `n` columns: 8, 16 and 32 map
/// to themselves, 64 maps to 32, anything wider to 64.
pub fn n_tb_for(n: usize) -> usize {
    match n {
        0..=8 => 8,
        9..=16 => 16,
        17..=64 => 32,
        _ => 64,
    }
}

/// `ceil(a / b)`
#[inline]
pub(crate) fn div_ceil(a: usize, b: usize) -> usize {
    a.div_ceil(b)
}
