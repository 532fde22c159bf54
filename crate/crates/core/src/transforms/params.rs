use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_C_K: f64 = 2.0;
pub const DEFAULT_C_S: f64 = 1.0;
pub const DEFAULT_C_Q: f64 = 1.0;

/// Accuracy inputs and the sketch dimensions derived from them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchParams {
    pub alpha: f64,
    pub beta: f64,
    /// Input dimension.
    pub d: usize,
    /// Output dimension, always a positive multiple of `s`.
    pub k: usize,
    /// SJLT sparsity (non-zeros per column).
    pub s: usize,
    pub c_k: f64,
    pub c_s: f64,
}

pub(crate) fn check_open_half(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 0.5 {
        Ok(())
    } else {
        Err(Error::InvalidAccuracy { name, value })
    }
}

pub(crate) fn check_block_structure(k: usize, s: usize) -> Result<()> {
    if s == 0 || k == 0 || !k.is_multiple_of(s) {
        Err(Error::InvalidBlockStructure { k, s })
    } else {
        Ok(())
    }
}

impl SketchParams {
    /// `s = ceil(c_s ln(1/beta) / alpha)` and
    /// `k = ceil(c_k ln(1/beta) / alpha^2)` rounded up to a multiple of `s`.
    pub fn from_accuracy(alpha: f64, beta: f64, d: usize, c_k: f64, c_s: f64) -> Result<Self> {
        check_open_half("alpha", alpha)?;
        check_open_half("beta", beta)?;
        if d == 0 {
            return Err(Error::InvalidParameter("input dimension must be at least 1".into()));
        }
        for (name, c) in [("c_k", c_k), ("c_s", c_s)] {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {c}")));
            }
        }
        let log_inv_beta = (1.0 / beta).ln();
        let s = ((c_s * log_inv_beta / alpha).ceil() as usize).max(1);
        let k_raw = ((c_k * log_inv_beta / (alpha * alpha)).ceil() as usize).max(1);
        let k = k_raw.div_ceil(s) * s;
        Ok(Self {
            alpha,
            beta,
            d,
            k,
            s,
            c_k,
            c_s,
        })
    }

    pub fn with_defaults(alpha: f64, beta: f64, d: usize) -> Result<Self> {
        Self::from_accuracy(alpha, beta, d, DEFAULT_C_K, DEFAULT_C_S)
    }

    /// Replaces the derived `k` and/or `s` with explicit values.
    pub fn with_dimensions(mut self, k: Option<usize>, s: Option<usize>) -> Result<Self> {
        if let Some(k) = k {
            self.k = k;
        }
        if let Some(s) = s {
            self.s = s;
        }
        check_block_structure(self.k, self.s)?;
        Ok(self)
    }

    pub fn block_len(&self) -> usize {
        self.k / self.s
    }

    /// `ceil(c_k ln(1/beta) / alpha^2)` before rounding to a multiple of `s`;
    /// the output dimension used for the dense transforms.
    pub fn unrounded_k(&self) -> usize {
        ((self.c_k * (1.0 / self.beta).ln() / (self.alpha * self.alpha)).ceil() as usize).max(1)
    }
}
