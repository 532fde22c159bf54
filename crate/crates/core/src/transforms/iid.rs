//! Dense i.i.d. Gaussian projection with entries from `N(0, 1/k)`.

use super::Norm;
use crate::error::{Error, Result};
use crate::noise::standard_normal;
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct IidGaussianTransform {
    d: usize,
    k: usize,
    seed: u64,
    // row-major k x d
    matrix: Vec<f64>,
    delta1_exact: f64,
    delta2_exact: f64,
}

impl IidGaussianTransform {
    /// Draws the matrix from `seed` and computes its exact column
    /// sensitivities in `O(dk)`.
    pub fn new(d: usize, k: usize, seed: u64) -> Result<Self> {
        if d == 0 || k == 0 {
            return Err(Error::InvalidParameter("d and k must be at least 1".into()));
        }
        let scale = 1.0 / (k as f64).sqrt();
        let mut rng = Rng::derive(seed, "iid-matrix", 0, 0);
        let matrix: Vec<f64> = (0..d * k).map(|_| scale * standard_normal(&mut rng)).collect();
        Ok(Self::from_matrix(d, k, seed, matrix))
    }

    fn from_matrix(d: usize, k: usize, seed: u64, matrix: Vec<f64>) -> Self {
        let mut l1 = vec![0.0; d];
        let mut l2 = vec![0.0; d];
        for row in matrix.chunks_exact(d) {
            for (j, &v) in row.iter().enumerate() {
                l1[j] += v.abs();
                l2[j] += v * v;
            }
        }
        let delta1_exact = l1.into_iter().fold(0.0, f64::max);
        let delta2_exact = l2.into_iter().fold(0.0, f64::max).sqrt();
        Self {
            d,
            k,
            seed,
            matrix,
            delta1_exact,
            delta2_exact,
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.d + j]
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.d {
            return Err(Error::DimMismatch {
                expected: self.d,
                got: x.len(),
            });
        }
        Ok(self
            .matrix
            .chunks_exact(self.d)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn column_sensitivity(&self, norm: Norm) -> f64 {
        match norm {
            Norm::L1 => self.delta1_exact,
            Norm::L2 => self.delta2_exact,
        }
    }
}
