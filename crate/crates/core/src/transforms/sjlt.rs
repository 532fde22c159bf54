//! Sparser JL transform, block construction.
//!
//! The `k` output coordinates are split into `s` blocks of length `k / s`.
//! Column `j` has exactly one non-zero per block `r`, at row
//! `r * (k / s) + h_r(j)`, with value `phi_r(j) / sqrt(s)`. Nothing of size
//! `k x d` is ever stored: `h_r` and `phi_r` are evaluated from the seed.

use serde::{Deserialize, Serialize};

use super::params::{check_block_structure, SketchParams};
use super::Norm;
use crate::error::{Error, Result};
use crate::rng::Rng;

const MERSENNE_61: u64 = (1 << 61) - 1;

/// How the per-block hash `h_r` and sign `phi_r` are generated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum HashMode {
    /// Seeded pseudorandom function; treated as fully independent.
    Prf,
    /// Random polynomials of degree `independence - 1` over `GF(2^61 - 1)`,
    /// giving `independence`-wise independent values before reduction.
    Polynomial { independence: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SjltTransform {
    d: usize,
    k: usize,
    s: usize,
    seed: u64,
    hash_mode: HashMode,
    block_len: usize,
    // per-block PRF keys for hash and sign
    row_keys: Vec<[u64; 2]>,
    // [r][0] = hash coefficients, [r][1] = sign coefficients
    poly: Vec<[Vec<u64>; 2]>,
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn prf_row_key(seed: u64, r: usize, purpose: u64) -> u64 {
    let a = mix64(seed ^ 0x9e37_79b9_7f4a_7c15);
    mix64(a ^ (r as u64).wrapping_mul(0xd6e8_feb8_6659_fd93) ^ purpose)
}

#[inline]
fn prf(row_key: u64, j: usize) -> u64 {
    mix64(row_key ^ (j as u64).wrapping_mul(0xa076_1d64_78bd_642f))
}

fn mulmod61(a: u64, b: u64) -> u64 {
    let prod = (a as u128) * (b as u128);
    let folded = (prod & MERSENNE_61 as u128) + (prod >> 61);
    let folded = folded as u64;
    if folded >= MERSENNE_61 {
        folded - MERSENNE_61
    } else {
        folded
    }
}

fn horner61(coeffs: &[u64], x: u64) -> u64 {
    let mut acc = 0u64;
    for &c in coeffs {
        acc = mulmod61(acc, x) + c;
        if acc >= MERSENNE_61 {
            acc -= MERSENNE_61;
        }
    }
    acc
}

impl SjltTransform {
    pub fn new(params: &SketchParams, seed: u64, hash_mode: HashMode) -> Result<Self> {
        Self::with_dims(params.d, params.k, params.s, seed, hash_mode)
    }

    pub fn with_dims(d: usize, k: usize, s: usize, seed: u64, hash_mode: HashMode) -> Result<Self> {
        check_block_structure(k, s)?;
        if d == 0 {
            return Err(Error::InvalidParameter("input dimension must be at least 1".into()));
        }
        let poly = match hash_mode {
            HashMode::Prf => Vec::new(),
            HashMode::Polynomial { independence } => {
                if independence == 0 {
                    return Err(Error::InvalidParameter(
                        "polynomial hashing needs independence >= 1".into(),
                    ));
                }
                (0..s)
                    .map(|r| {
                        let draw = |purpose| {
                            let mut rng = Rng::derive(seed, "sjlt-poly", r as u64, purpose);
                            (0..independence).map(|_| rng.below(MERSENNE_61)).collect()
                        };
                        [draw(0), draw(1)]
                    })
                    .collect()
            }
        };
        let row_keys = match hash_mode {
            HashMode::Prf => (0..s).map(|r| [prf_row_key(seed, r, 0), prf_row_key(seed, r, 1)]).collect(),
            HashMode::Polynomial { .. } => Vec::new(),
        };
        Ok(Self {
            d,
            k,
            s,
            seed,
            hash_mode,
            block_len: k / s,
            row_keys,
            poly,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn hash_mode(&self) -> HashMode {
        self.hash_mode
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    /// `(h_r(j), phi_r(j))`: bucket inside block `r` and the sign.
    #[inline]
    pub fn cell(&self, r: usize, j: usize) -> (usize, f64) {
        match self.hash_mode {
            HashMode::Prf => {
                let [hash_key, sign_key] = self.row_keys[r];
                let h = prf(hash_key, j);
                let bucket = ((h as u128 * self.block_len as u128) >> 64) as usize;
                let sign = if prf(sign_key, j) >> 63 == 0 { 1.0 } else { -1.0 };
                (bucket, sign)
            }
            HashMode::Polynomial { .. } => {
                let [hash, sign] = &self.poly[r];
                let x = j as u64 + 1;
                let bucket = (horner61(hash, x) % self.block_len as u64) as usize;
                let sign = if horner61(sign, x) & 1 == 0 { 1.0 } else { -1.0 };
                (bucket, sign)
            }
        }
    }

    /// Non-zeros of column `j` as `(row, value)`, one per block.
    pub fn column(&self, j: usize) -> Vec<(usize, f64)> {
        let scale = 1.0 / (self.s as f64).sqrt();
        (0..self.s)
            .map(|r| {
                let (bucket, sign) = self.cell(r, j);
                (r * self.block_len + bucket, sign * scale)
            })
            .collect()
    }

    /// `S x` in time `O(s * nnz(x) + k)`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.d {
            return Err(Error::DimMismatch {
                expected: self.d,
                got: x.len(),
            });
        }
        let mut out = vec![0.0; self.k];
        let scale = 1.0 / (self.s as f64).sqrt();
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            let v = xj * scale;
            for r in 0..self.s {
                let (bucket, sign) = self.cell(r, j);
                out[r * self.block_len + bucket] += sign * v;
            }
        }
        Ok(out)
    }

    /// Streaming update `acc += S (delta e_j)`; touches exactly `s` entries.
    pub fn update(&self, acc: &mut [f64], j: usize, delta: f64) -> Result<()> {
        if acc.len() != self.k {
            return Err(Error::DimMismatch {
                expected: self.k,
                got: acc.len(),
            });
        }
        if j >= self.d {
            return Err(Error::DimMismatch {
                expected: self.d,
                got: j + 1,
            });
        }
        if delta == 0.0 {
            return Ok(());
        }
        let v = delta / (self.s as f64).sqrt();
        for r in 0..self.s {
            let (bucket, sign) = self.cell(r, j);
            acc[r * self.block_len + bucket] += sign * v;
        }
        Ok(())
    }

    /// Exact column sensitivity: every column has `s` entries of magnitude
    /// `1/sqrt(s)`, so the l1 norm is `sqrt(s)` and the l2 norm is 1.
    pub fn column_sensitivity(&self, norm: Norm) -> f64 {
        match norm {
            Norm::L1 => (self.s as f64).sqrt(),
            Norm::L2 => 1.0,
        }
    }

    /// Dense `k x d` matrix, row-major. For tests and small instances only.
    pub fn materialize(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.d]; self.k];
        for j in 0..self.d {
            for (row, value) in self.column(j) {
                m[row][j] = value;
            }
        }
        m
    }
}
