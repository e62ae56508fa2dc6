use thiserror::Error;

/// Shape and argument errors for dense matrices and GEMM.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixError {
    #[error("data length {actual} does not match {rows}x{cols}")]
    DataLength { rows: usize, cols: usize, actual: usize },
    #[error("inner dimensions disagree: lhs is {lhs_rows}x{lhs_cols}, rhs is {rhs_rows}x{rhs_cols}")]
    DimensionMismatch {
        lhs_rows: usize,
        lhs_cols: usize,
        rhs_rows: usize,
        rhs_cols: usize,
    },
    #[error("sparsity {0} outside [0, 1]")]
    InvalidSparsity(f64),
    #[error("invalid tile configuration: {0}")]
    InvalidConfig(String),
}

/// Structural problems in a Tiled-CSL matrix.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TcslError {
    #[error("inconsistent offsets: {0}")]
    InconsistentOffsets(String),
    #[error("tile {tile} has {count} entries, not a multiple of 32")]
    UnpaddedTile { tile: usize, count: usize },
    #[error("entry {index} has location {location}, tile holds {capacity} elements")]
    LocationOutOfRange {
        index: usize,
        location: u16,
        capacity: usize,
    },
    #[error("tile coordinate ({x}, {y}) outside the {m_tb}x{k_tb} tile")]
    CoordinateOutOfRange {
        x: usize,
        y: usize,
        m_tb: usize,
        k_tb: usize,
    },
    #[error("tile {tile}: nonzero entry at location {location} falls in the padding")]
    EntryInPadding { tile: usize, location: u16 },
    #[error("tile {tile}: conflicting values at location {location}")]
    ConflictingEntries { tile: usize, location: u16 },
    #[error("expected {expected} tiles for the stated geometry, found {found}")]
    TileCount { expected: usize, found: usize },
    #[error(transparent)]
    Config(#[from] MatrixError),
}

/// Errors reading the binary FLDM and TCSL containers.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported version {0}")]
    UnsupportedVersion(u16),
    #[error("unknown dtype code {0}")]
    UnknownDtype(u16),
    #[error("truncated: needed {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("{0} trailing bytes after payload")]
    TrailingBytes(usize),
    #[error(transparent)]
    Tcsl(#[from] TcslError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl FormatError {
    /// Stable numeric code per failure kind.
    pub fn code(&self) -> u32 {
        match self {
            FormatError::BadMagic { .. } => 1,
            FormatError::UnsupportedVersion(_) => 2,
            FormatError::UnknownDtype(_) => 3,
            FormatError::Truncated { .. } => 4,
            FormatError::TrailingBytes(_) => 5,
            FormatError::Tcsl(TcslError::InconsistentOffsets(_)) => 6,
            FormatError::Tcsl(_) => 7,
            FormatError::Matrix(_) => 8,
            FormatError::Io(_) => 9,
        }
    }
}

/// Errors from the tile-pipelined SpMM engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpmmError {
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Tcsl(#[from] TcslError),
    #[error("tile geometry {found_m}x{found_k} does not match configuration {cfg_m}x{cfg_k}")]
    TileMismatch {
        found_m: usize,
        found_k: usize,
        cfg_m: usize,
        cfg_k: usize,
    },
}
