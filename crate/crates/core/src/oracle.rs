//! Reference moments: exhaustive enumeration of the SJLT randomness on tiny
//! instances, and a seeded Monte-Carlo driver for everything else.
//!
//! The enumerator builds `S x` straight from the block definition and does
//! not call into [`crate::transforms`], so it can serve as an oracle for it.

use crate::error::{Error, Result};
use crate::estimators::noise_moment;
use crate::privacy::NoiseSpec;
use crate::rng::Rng;

/// Configuration limit for [`enumerate_sjlt_moments`].
pub const MAX_CONFIGS: f64 = 1e7;

/// Minimum trial count for [`mc_moments`].
pub const MIN_TRIALS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleResult {
    pub mean: f64,
    /// Population variance for exhaustive results, unbiased sample variance
    /// for Monte Carlo.
    pub variance: f64,
    /// Configurations enumerated or trials run.
    pub count: u64,
    /// `sample_std / sqrt(N)`; `None` for exhaustive results.
    pub stderr: Option<f64>,
}

impl OracleResult {
    /// Whether `target` lies within `z` standard errors of the mean.
    /// Exhaustive results have no stderr and are compared exactly.
    pub fn within(&self, target: f64, z: f64) -> bool {
        match self.stderr {
            Some(se) => (self.mean - target).abs() <= z * se,
            None => self.mean == target,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Statistic {
    /// `||S x||^2`.
    NormSq,
    /// The bias-corrected estimator `||S x + eta - mu||^2 - 2k E[eta^2]`
    /// with `x` playing the role of `x - y`. Noise moments are folded in
    /// analytically per configuration.
    EstWithNoise(NoiseSpec),
}

/// `(2k/s)^(s d)`, the number of equally likely `(bucket, sign)` assignments.
pub fn sjlt_config_count(d: usize, k: usize, s: usize) -> f64 {
    if s == 0 || !k.is_multiple_of(s) {
        return f64::INFINITY;
    }
    (2.0 * (k / s) as f64).powf((s * d) as f64)
}

/// Exact mean and variance of `statistic` over every hash and sign
/// assignment of the fully independent block SJLT.
pub fn enumerate_sjlt_moments(
    d: usize,
    k: usize,
    s: usize,
    x: &[f64],
    statistic: Statistic,
) -> Result<OracleResult> {
    if s == 0 || k == 0 || !k.is_multiple_of(s) {
        return Err(Error::InvalidBlockStructure { k, s });
    }
    if x.len() != d {
        return Err(Error::DimMismatch {
            expected: d,
            got: x.len(),
        });
    }
    let configs = sjlt_config_count(d, k, s);
    if configs > MAX_CONFIGS {
        return Err(Error::TooManyConfigs {
            configs,
            limit: MAX_CONFIGS,
        });
    }
    let block = k / s;
    let radix = 2 * block;
    let positions = s * d;
    let scale = 1.0 / (s as f64).sqrt();

    // Conditional on S the noisy estimator has mean ||Sx||^2 and variance
    // 8 m2 ||Sx||^2 + 2k m4 + 2k m2^2 (coordinates are independent, the
    // difference of two noise draws has second moment 2 m2 and fourth
    // moment 2 m4 + 6 m2^2).
    let (m2, m4) = match statistic {
        Statistic::NormSq => (0.0, 0.0),
        Statistic::EstWithNoise(noise) => (noise_moment(&noise, 2), noise_moment(&noise, 4)),
    };
    let kf = k as f64;
    let noise_const = 2.0 * kf * m4 + 2.0 * kf * m2 * m2;

    let mut digits = vec![0usize; positions];
    let mut y = vec![0.0; k];
    let mut norms = Vec::with_capacity(configs as usize);
    loop {
        y.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..d {
            for r in 0..s {
                let digit = digits[j * s + r];
                let bucket = digit / 2;
                let sign = if digit.is_multiple_of(2) { 1.0 } else { -1.0 };
                y[r * block + bucket] += sign * scale * x[j];
            }
        }
        norms.push(y.iter().map(|v| v * v).sum::<f64>());

        let mut p = 0;
        while p < positions {
            digits[p] += 1;
            if digits[p] < radix {
                break;
            }
            digits[p] = 0;
            p += 1;
        }
        if p == positions {
            break;
        }
    }

    let n = norms.len() as f64;
    let mean = norms.iter().sum::<f64>() / n;
    let var_s = norms.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let variance = match statistic {
        Statistic::NormSq => var_s,
        Statistic::EstWithNoise(_) => var_s + 8.0 * m2 * mean + noise_const,
    };
    Ok(OracleResult {
        mean,
        variance,
        count: norms.len() as u64,
        stderr: None,
    })
}

/// Mean, unbiased variance and stderr of a sample, accumulated in order.
pub fn summarize(samples: &[f64]) -> OracleResult {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let variance = if samples.len() > 1 {
        samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    OracleResult {
        mean,
        variance,
        count: samples.len() as u64,
        stderr: Some((variance / n).sqrt()),
    }
}

/// Runs `trial` `n` times, trial `i` drawing from
/// `Rng::derive(seed, label, i, 0)`, and returns the per-trial values in
/// trial order. Parallel when the `parallel` feature is on; the output does
/// not depend on scheduling.
pub fn mc_samples<F>(trial: F, n: usize, seed: u64, label: &str) -> Vec<f64>
where
    F: Fn(&mut Rng) -> f64 + Sync,
{
    let run = |i: usize| trial(&mut Rng::derive(seed, label, i as u64, 0));
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(run).collect()
    }
}

/// Monte-Carlo moments of one scalar statistic. Requires `n >= 1000`.
pub fn mc_moments<F>(trial: F, n: usize, seed: u64, label: &str) -> Result<OracleResult>
where
    F: Fn(&mut Rng) -> f64 + Sync,
{
    if n < MIN_TRIALS {
        return Err(Error::InvalidParameter(format!(
            "Monte Carlo needs at least {MIN_TRIALS} trials, got {n}"
        )));
    }
    Ok(summarize(&mc_samples(trial, n, seed, label)))
}
