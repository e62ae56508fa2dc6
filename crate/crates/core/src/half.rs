//! IEEE-754 binary16 values stored as raw bit patterns.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Canonical quiet NaN produced for every NaN input.
pub const CANONICAL_NAN: u16 = 0x7E00;

/// A binary16 value kept as its 16-bit pattern.
///
/// Equality is bitwise, so `+0.0` and `-0.0` compare unequal; use
/// [`HalfBits::is_zero`] for numeric zero tests.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HalfBits(pub u16);

impl HalfBits {
    pub const ZERO: HalfBits = HalfBits(0x0000);
    pub const NEG_ZERO: HalfBits = HalfBits(0x8000);
    pub const ONE: HalfBits = HalfBits(0x3C00);
    pub const MAX: HalfBits = HalfBits(0x7BFF);

    #[inline]
    pub const fn from_bits(bits: u16) -> Self {
        HalfBits(bits)
    }

    #[inline]
    pub const fn to_bits(self) -> u16 {
        self.0
    }

    /// Nearest binary16, ties to even. Magnitudes at or above 65520 round to
    /// infinity; NaN becomes [`CANONICAL_NAN`].
    #[inline]
    pub fn from_f32(x: f32) -> Self {
        if x.is_nan() {
            return HalfBits(CANONICAL_NAN);
        }
        HalfBits(half::f16::from_f32(x).to_bits())
    }

    #[inline]
    pub fn from_f64(x: f64) -> Self {
        if x.is_nan() {
            return HalfBits(CANONICAL_NAN);
        }
        HalfBits(half::f16::from_f64(x).to_bits())
    }

    /// Exact widening; every binary16 value is representable in binary32.
    #[inline]
    pub fn to_f32(self) -> f32 {
        half::f16::from_bits(self.0).to_f32()
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        half::f16::from_bits(self.0).to_f64()
    }

    /// True for both signed zeros.
    #[inline]
    pub const fn is_zero(self) -> bool {
        self.0 & 0x7FFF == 0
    }

    #[inline]
    pub const fn is_finite(self) -> bool {
        self.0 & 0x7C00 != 0x7C00
    }

    #[inline]
    pub const fn is_nan(self) -> bool {
        self.0 & 0x7C00 == 0x7C00 && self.0 & 0x03FF != 0
    }

    /// Magnitude key: orders non-NaN values by `|v|`.
    #[inline]
    pub const fn magnitude_key(self) -> u16 {
        self.0 & 0x7FFF
    }

    /// Maps `-0.0` to `+0.0`, leaves everything else alone.
    #[inline]
    pub const fn normalize_zero(self) -> Self {
        if self.is_zero() {
            HalfBits::ZERO
        } else {
            self
        }
    }
}

impl fmt::Debug for HalfBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HalfBits({:#06x} = {})", self.0, self.to_f32())
    }
}

impl From<HalfBits> for f32 {
    fn from(h: HalfBits) -> f32 {
        h.to_f32()
    }
}

/// Conversion entry point used across the crate.
#[inline]
pub fn f16_from_f32(x: f32) -> HalfBits {
    HalfBits::from_f32(x)
}
