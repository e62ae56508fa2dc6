//! Magnitude pruning and seeded random sparse matrices.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::MatrixError;
use crate::half::HalfBits;
use crate::matrix::DenseMatrix;

/// Smallest magnitude drawn for a nonzero element.
pub const MIN_MAGNITUDE: f32 = 1.0 / 64.0;
/// Largest magnitude drawn for a nonzero element.
pub const MAX_MAGNITUDE: f32 = 1.0;

fn check_beta(beta: f64) -> Result<(), MatrixError> {
    if (0.0..=1.0).contains(&beta) {
        Ok(())
    } else {
        Err(MatrixError::InvalidSparsity(beta))
    }
}

/// Zero out the `floor(beta * len)` smallest-magnitude elements.
///
/// Among equal magnitudes the element with the larger row-major index is
/// pruned first. Pruned elements become `+0.0`; survivors keep their bits.
pub fn prune_magnitude(a: &DenseMatrix, beta: f64) -> Result<DenseMatrix, MatrixError> {
    check_beta(beta)?;
    let len = a.data().len();
    let target = ((beta * len as f64).floor() as usize).min(len);
    let mut out = a.clone();
    if target == 0 {
        return Ok(out);
    }
    // (magnitude, reversed index) is a strict total order
    let key = |i: usize| (a.data()[i].magnitude_key(), usize::MAX - i);
    let mut order: Vec<usize> = (0..len).collect();
    if target < len {
        order.select_nth_unstable_by_key(target - 1, |&i| key(i));
    }
    for &i in &order[..target] {
        out.data_mut()[i] = HalfBits::ZERO;
    }
    Ok(out)
}

/// Deterministic random matrix with exactly `round(beta * rows * cols)` zeros.
///
/// Zero positions form a uniformly random subset chosen by sequential
/// selection sampling over row-major order (ChaCha8 stream seeded with
/// `seed`). Every other element is `s * u` rounded to binary16, with `s` a
/// fair random sign and `u` uniform on `[1/64, 1]`, so no nonzero draw can
/// round to zero.
pub fn gen_random_sparse(
    rows: usize,
    cols: usize,
    beta: f64,
    seed: u64,
) -> Result<DenseMatrix, MatrixError> {
    check_beta(beta)?;
    let len = rows * cols;
    let zeros = ((beta * len as f64).round() as usize).min(len);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut remaining_zeros = zeros;
    let mut data = Vec::with_capacity(len);
    for i in 0..len {
        let remaining = len - i;
        let is_zero = remaining_zeros > 0 && rng.gen_range(0..remaining as u64) < remaining_zeros as u64;
        if is_zero {
            remaining_zeros -= 1;
            data.push(HalfBits::ZERO);
        } else {
            let mag: f32 = rng.gen_range(MIN_MAGNITUDE..=MAX_MAGNITUDE);
            let v = if rng.gen::<bool>() { -mag } else { mag };
            data.push(HalfBits::from_f32(v));
        }
    }
    DenseMatrix::new(rows, cols, data)
}
