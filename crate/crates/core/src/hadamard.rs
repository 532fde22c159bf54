//! Normalized fast Walsh–Hadamard transform.

use crate::error::{Error, Result};

/// In-place normalized Walsh–Hadamard transform, `v <- H v` with
/// `H[f][j] = d^{-1/2} (-1)^{popcount(f & j)}`.
///
/// `H` is symmetric and orthonormal, so applying it twice is the identity.
pub fn fwht_in_place(v: &mut [f64]) -> Result<()> {
    let n = v.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    let mut half = 1;
    while half < n {
        for block in v.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        half *= 2;
    }
    let scale = 1.0 / (n as f64).sqrt();
    v.iter_mut().for_each(|x| *x *= scale);
    Ok(())
}

/// Returns `H v` for the normalized Hadamard matrix.
pub fn fwht(v: &[f64]) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    fwht_in_place(&mut out)?;
    Ok(out)
}

/// Appends zeros up to the next power of two.
pub fn pad_pow2(v: &[f64]) -> Vec<f64> {
    let target = v.len().max(1).next_power_of_two();
    let mut out = Vec::with_capacity(target);
    out.extend_from_slice(v);
    out.resize(target, 0.0);
    out
}

/// Entry `(f, j)` (0-based) of the normalized `d x d` Hadamard matrix.
pub fn hadamard_entry(f: usize, j: usize, d: usize) -> f64 {
    let sign = if (f & j).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
    sign / (d as f64).sqrt()
}
