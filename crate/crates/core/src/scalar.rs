//! Accumulator scalars for the GEMM paths.
//!
//! Inputs are always binary16; the accumulator type decides the precision of
//! the running sums. `f32` mirrors mixed-precision tensor-core accumulation
//! and is the default everywhere; `f64` exists for analysis.

use std::fmt::Debug;

use num_traits::Float;

use crate::half::HalfBits;

pub trait Accumulator: Float + Debug + Default + Send + Sync + 'static {
    /// Bytes per element when written to a dense file.
    const BYTES: usize;

    /// Exact widening of a binary16 input.
    fn from_half(h: HalfBits) -> Self;

    /// Raw bit pattern, zero-extended, for bit-exact comparisons.
    fn to_bits_u64(self) -> u64;

    /// Round to nearest binary16.
    fn to_half(self) -> HalfBits;
}

impl Accumulator for f32 {
    const BYTES: usize = 4;

    #[inline]
    fn from_half(h: HalfBits) -> Self {
        h.to_f32()
    }

    #[inline]
    fn to_bits_u64(self) -> u64 {
        u64::from(self.to_bits())
    }

    #[inline]
    fn to_half(self) -> HalfBits {
        HalfBits::from_f32(self)
    }
}

impl Accumulator for f64 {
    const BYTES: usize = 8;

    #[inline]
    fn from_half(h: HalfBits) -> Self {
        h.to_f64()
    }

    #[inline]
    fn to_bits_u64(self) -> u64 {
        self.to_bits()
    }

    #[inline]
    fn to_half(self) -> HalfBits {
        HalfBits::from_f64(self)
    }
}
