//! Fast JL transform `Phi = P H D`, stored in its LPP-normalized form
//! `(1/sqrt(k)) Phi`.
//!
//! `D` is a random sign diagonal, `H` the normalized Hadamard matrix of the
//! padded dimension and `P` a `k x d_pad` matrix whose entries are present
//! with probability `q` and then drawn from `N(0, 1/q)`. The realized sparse
//! rows of `P` are kept so the exact sensitivity can be computed.

use std::sync::OnceLock;

use super::params::check_open_half;
use super::Norm;
use crate::error::{Error, Result};
use crate::hadamard::{fwht_in_place, pad_pow2};
use crate::noise::standard_normal;
use crate::rng::Rng;

/// Sparse row of `P`: `(column, value)` pairs with increasing columns.
pub type SparseRow = Vec<(usize, f64)>;

#[derive(Clone, Debug)]
pub struct FjltTransform {
    d: usize,
    d_pad: usize,
    k: usize,
    q: f64,
    c_q: f64,
    alpha: f64,
    beta: f64,
    seed: u64,
    signs: Vec<f64>,
    rows: Vec<SparseRow>,
    // (l1, l2) max column norms over the first d columns
    sensitivity: OnceLock<(f64, f64)>,
}

impl PartialEq for FjltTransform {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d
            && self.d_pad == other.d_pad
            && self.k == other.k
            && self.q == other.q
            && self.c_q == other.c_q
            && self.seed == other.seed
            && self.signs == other.signs
            && self.rows == other.rows
    }
}

/// `q = min(c_q ln^2(1/beta) / d_pad, 1)`.
pub fn sparsity_probability(beta: f64, d_pad: usize, c_q: f64) -> f64 {
    let l = (1.0 / beta).ln();
    (c_q * l * l / d_pad as f64).min(1.0)
}

impl FjltTransform {
    pub fn new(alpha: f64, beta: f64, d: usize, k: usize, c_q: f64, seed: u64) -> Result<Self> {
        check_open_half("beta", beta)?;
        if k == 0 || d == 0 {
            return Err(Error::InvalidParameter("d and k must be at least 1".into()));
        }
        if !(c_q > 0.0 && c_q.is_finite()) {
            return Err(Error::InvalidParameter(format!("c_q must be positive, got {c_q}")));
        }
        let d_pad = d.next_power_of_two();
        let q = sparsity_probability(beta, d_pad, c_q);

        let mut sign_rng = Rng::derive(seed, "fjlt-signs", 0, 0);
        let signs = (0..d_pad).map(|_| sign_rng.sign()).collect();

        let value_scale = 1.0 / q.sqrt();
        let mut p_rng = Rng::derive(seed, "fjlt-p", 0, 0);
        let rows = (0..k)
            .map(|_| {
                (0..d_pad)
                    .filter_map(|f| {
                        p_rng
                            .bernoulli(q)
                            .then(|| (f, value_scale * standard_normal(&mut p_rng)))
                    })
                    .collect()
            })
            .collect();

        Ok(Self {
            d,
            d_pad,
            k,
            q,
            c_q,
            alpha,
            beta,
            seed,
            signs,
            rows,
            sensitivity: OnceLock::new(),
        })
    }

    /// Rebuilds a transform from stored parts (deserialization, hand-built instances).
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        d: usize,
        k: usize,
        q: f64,
        c_q: f64,
        alpha: f64,
        beta: f64,
        seed: u64,
        signs: Vec<f64>,
        rows: Vec<SparseRow>,
    ) -> Result<Self> {
        let d_pad = d.max(1).next_power_of_two();
        if d == 0 || k == 0 {
            return Err(Error::InvalidParameter("d and k must be at least 1".into()));
        }
        if signs.len() != d_pad || signs.iter().any(|s| s.abs() != 1.0) {
            return Err(Error::InvalidParameter(format!(
                "expected {d_pad} signs in {{-1, +1}}"
            )));
        }
        if rows.len() != k {
            return Err(Error::InvalidParameter(format!("expected {k} rows of P, got {}", rows.len())));
        }
        for row in &rows {
            if row.windows(2).any(|w| w[0].0 >= w[1].0)
                || row.iter().any(|&(f, v)| f >= d_pad || !v.is_finite())
            {
                return Err(Error::InvalidParameter("malformed sparse row of P".into()));
            }
        }
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::InvalidParameter(format!("q must lie in (0, 1], got {q}")));
        }
        Ok(Self {
            d,
            d_pad,
            k,
            q,
            c_q,
            alpha,
            beta,
            seed,
            signs,
            rows,
            sensitivity: OnceLock::new(),
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn d_pad(&self) -> usize {
        self.d_pad
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn c_q(&self) -> f64 {
        self.c_q
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    pub fn rows(&self) -> &[SparseRow] {
        &self.rows
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Whether `q >= 1 / (d_pad / 9 + 1)`, the regime where the normalized
    /// transform's variance is at most `(3/k) ||x||^4`.
    pub fn satisfies_variance_condition(&self) -> bool {
        self.q >= 1.0 / (self.d_pad as f64 / 9.0 + 1.0)
    }

    /// `(1/sqrt(k)) P H D pad(x)` in `O(d_pad log d_pad + nnz(P))`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.d {
            return Err(Error::DimMismatch {
                expected: self.d,
                got: x.len(),
            });
        }
        let mut u = pad_pow2(x);
        u.iter_mut().zip(&self.signs).for_each(|(v, s)| *v *= s);
        fwht_in_place(&mut u)?;
        let norm = 1.0 / (self.k as f64).sqrt();
        Ok(self
            .rows
            .iter()
            .map(|row| norm * row.iter().map(|&(f, p)| p * u[f]).sum::<f64>())
            .collect())
    }

    /// Exact max column norm of the normalized transform over the `d` input
    /// columns. Computed once, in `O(k d_pad log d_pad)`.
    pub fn column_sensitivity(&self, norm: Norm) -> f64 {
        let (l1, l2) = *self.sensitivity.get_or_init(|| self.compute_sensitivity());
        match norm {
            Norm::L1 => l1,
            Norm::L2 => l2,
        }
    }

    fn compute_sensitivity(&self) -> (f64, f64) {
        // Row i of P H is H applied to row i of P (H is symmetric); D only
        // flips column signs and does not change norms.
        let mut l1 = vec![0.0; self.d];
        let mut l2 = vec![0.0; self.d];
        let mut dense = vec![0.0; self.d_pad];
        for row in &self.rows {
            dense.iter_mut().for_each(|v| *v = 0.0);
            for &(f, p) in row {
                dense[f] = p;
            }
            fwht_in_place(&mut dense).expect("d_pad is a power of two");
            for j in 0..self.d {
                l1[j] += dense[j].abs();
                l2[j] += dense[j] * dense[j];
            }
        }
        let norm = 1.0 / (self.k as f64).sqrt();
        let max_l1 = l1.iter().cloned().fold(0.0, f64::max) * norm;
        let max_l2 = l2.iter().cloned().fold(0.0, f64::max).sqrt() * norm;
        (max_l1, max_l2)
    }
}
