//! Tiled-CSL sparse weights and a load-as-sparse, compute-as-dense SpMM.
//!
//! * [`matrix`], [`sparsify`], [`half`]: binary16 matrices, pruning and the
//!   dense reference GEMM.
//! * [`tcsl`]: the tile-local sparse format with bank-aware entry ordering.
//! * [`extract`]: shared-memory wavefront model for the extract stores.
//! * [`engine`]: tile-pipelined SpMM, bit-exact against the reference.
//! * [`pipeline`]: double-buffered stage timeline, its validator and a
//!   stream-bandwidth time model.
//! * [`analyzer`]: computational intensity, roofline and footprint numbers.
//!
//! The GEMM paths are generic over the accumulator ([`Accumulator`]);
//! binary32 is the default and the aliases below fix it.

pub mod analyzer;
pub mod config;
pub mod engine;
pub mod error;
pub mod extract;
pub mod fldm;
pub mod half;
pub mod matrix;
pub mod pipeline;
pub mod scalar;
pub mod sparsify;
pub mod tcsl;

pub use config::{n_tb_for, TileConfig};
pub use engine::{extract_tile, reg_pressure, spmm, TileBuffer};
pub use error::{FormatError, MatrixError, SpmmError, TcslError};
pub use extract::{group_wavefronts, ldmatrix_wavefronts, matrix_extract_stats, WavefrontStats};
pub use half::{f16_from_f32, HalfBits};
pub use matrix::{dense_gemm_ref, sparsity, DenseMatrix, OutputMatrix};
pub use pipeline::{build_schedule, estimate_time, validate_schedule, EventTimeline, HardwareParams};
pub use scalar::Accumulator;
pub use sparsify::{gen_random_sparse, prune_magnitude};
pub use tcsl::{bank_id, decode, deserialize, encode, serialize, BankId, TcslEntry, TcslMatrix};

/// Binary32-accumulated result matrix.
pub type OutputF32 = OutputMatrix<f32>;
/// Binary64-accumulated result matrix.
pub type OutputF64 = OutputMatrix<f64>;
/// Roofline point in binary64.
pub type RooflinePointF64 = analyzer::RooflinePoint<f64>;

/// Reference product with binary32 accumulation.
pub fn dense_gemm_f32(a: &DenseMatrix, b: &DenseMatrix, cfg: &TileConfig) -> Result<OutputF32, MatrixError> {
    dense_gemm_ref(a, b, cfg)
}

/// SpMM with binary32 accumulation.
pub fn spmm_f32(a: &TcslMatrix, b: &DenseMatrix, cfg: &TileConfig) -> Result<OutputF32, SpmmError> {
    spmm(a, b, cfg)
}
