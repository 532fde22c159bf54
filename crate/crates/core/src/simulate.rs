//! One-trial samplers of the distance estimator, for Monte-Carlo benchmarks
//! and statistical tests.
//!
//! Each trial draws a fresh transform seed and fresh noise from the trial's
//! stream, sketches `x` and `y`, and returns the bias-corrected estimate.
//! Sketch metadata (fingerprints) is skipped; the arithmetic is the same as
//! [`crate::privacy::privatize`] followed by
//! [`crate::estimators::estimate_sqdist`].

use crate::error::{Error, Result};
use crate::estimators::{
    analytic_variance, bias_term, estimate_from_values, fjlt_in_exact_variance,
    fjlt_transform_variance, noise_variance_terms, Scheme, VariancePrediction,
};
use crate::privacy::{calibrate, gaussian_sigma_floor, Mechanism, NoiseSpec, PrivacyParams};
use crate::rng::Rng;
use crate::transforms::{
    sparsity_probability, FjltTransform, HashMode, IidGaussianTransform, SjltTransform, Transform,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoisePolicy {
    /// Same noise distribution in every trial.
    Fixed(NoiseSpec),
    /// Calibrated against each trial's own transform. For input
    /// perturbation this is the sigma floor, which does not depend on the
    /// transform.
    PerTransform {
        privacy: PrivacyParams,
        mechanism: Option<Mechanism>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub d: usize,
    pub k: usize,
    /// SJLT sparsity; ignored otherwise.
    pub s: usize,
    /// FJLT failure probability (sets `q`); ignored otherwise.
    pub beta: f64,
    pub c_q: f64,
    pub noise: NoisePolicy,
}

impl SchemeConfig {
    pub fn sjlt(d: usize, k: usize, s: usize, noise: NoisePolicy) -> Self {
        Self {
            scheme: Scheme::SjltOut,
            d,
            k,
            s,
            beta: f64::NAN,
            c_q: f64::NAN,
            noise,
        }
    }

    pub fn iid(d: usize, k: usize, noise: NoisePolicy) -> Self {
        Self {
            scheme: Scheme::IidOut,
            d,
            k,
            s: 0,
            beta: f64::NAN,
            c_q: f64::NAN,
            noise,
        }
    }

    pub fn fjlt(scheme: Scheme, d: usize, k: usize, beta: f64, c_q: f64, noise: NoisePolicy) -> Self {
        Self {
            scheme,
            d,
            k,
            s: 0,
            beta,
            c_q,
            noise,
        }
    }

    pub fn d_pad(&self) -> usize {
        self.d.next_power_of_two()
    }

    /// FJLT sparsity probability.
    pub fn q(&self) -> f64 {
        sparsity_probability(self.beta, self.d_pad(), self.c_q)
    }

    pub fn build_transform(&self, seed: u64) -> Result<Transform> {
        Ok(match self.scheme {
            Scheme::SjltOut => SjltTransform::with_dims(self.d, self.k, self.s, seed, HashMode::Prf)?.into(),
            Scheme::IidOut => IidGaussianTransform::new(self.d, self.k, seed)?.into(),
            Scheme::FjltOut | Scheme::FjltIn => {
                // alpha is informational for the FJLT; 0.25 keeps it in range.
                FjltTransform::new(0.25, self.beta, self.d, self.k, self.c_q, seed)?.into()
            }
        })
    }

    pub fn noise_for(&self, t: &Transform) -> Result<NoiseSpec> {
        match self.noise {
            NoisePolicy::Fixed(noise) => Ok(noise),
            NoisePolicy::PerTransform { privacy, mechanism } => {
                if self.scheme == Scheme::FjltIn {
                    if privacy.delta == 0.0 {
                        return Err(Error::GaussianNeedsDelta);
                    }
                    Ok(NoiseSpec::Gaussian {
                        sigma: gaussian_sigma_floor(1.0, privacy.epsilon, privacy.delta),
                    })
                } else {
                    Ok(calibrate(&t.sensitivities(), &privacy, mechanism)?.noise)
                }
            }
        }
    }

    /// Builds the transform for `seed` and returns the noise it would get.
    pub fn reference_noise(&self, seed: u64) -> Result<NoiseSpec> {
        self.noise_for(&self.build_transform(seed)?)
    }

    /// One estimator realization.
    pub fn trial(&self, x: &[f64], y: &[f64], rng: &mut Rng) -> Result<f64> {
        let t = self.build_transform(rng.next_u64())?;
        let noise = self.noise_for(&t)?;
        let bias = bias_term(self.scheme, &noise, self.k, self.d)?;
        let (u, v) = if self.scheme == Scheme::FjltIn {
            let mut xn = x.to_vec();
            let mut yn = y.to_vec();
            noise.add_to(&mut xn, rng)?;
            noise.add_to(&mut yn, rng)?;
            (t.apply(&xn)?, t.apply(&yn)?)
        } else {
            let mut u = t.apply(x)?;
            let mut v = t.apply(y)?;
            noise.add_to(&mut u, rng)?;
            noise.add_to(&mut v, rng)?;
            (u, v)
        };
        Ok(estimate_from_values(&u, &v, bias))
    }

    /// The analytic prediction for noise `noise` (exact for the SJLT and the
    /// i.i.d. baseline, a bound for the FJLT schemes).
    pub fn analytic(&self, noise: &NoiseSpec, x: &[f64], y: &[f64]) -> Result<VariancePrediction> {
        let (d2, d4) = dist_norms(x, y);
        analytic_variance(self.scheme, noise, self.k, self.d, d2, Some(d4))
    }

    /// Exact variance including the FJLT's `q`-dependent transform term.
    pub fn exact_variance(&self, noise: &NoiseSpec, x: &[f64], y: &[f64]) -> Result<f64> {
        let (d2, d4) = dist_norms(x, y);
        match self.scheme {
            Scheme::SjltOut | Scheme::IidOut => Ok(self.analytic(noise, x, y)?.value),
            Scheme::FjltOut => Ok(fjlt_transform_variance(self.k, self.q(), self.d_pad(), d2, d4)
                + noise_variance_terms(noise, self.k, d2)),
            Scheme::FjltIn => match *noise {
                NoiseSpec::Gaussian { sigma } => Ok(fjlt_in_exact_variance(
                    self.k,
                    self.q(),
                    self.d,
                    self.d_pad(),
                    sigma,
                    d2,
                    d4,
                )),
                NoiseSpec::Laplace { .. } => Err(Error::SchemeMismatch(
                    "input perturbation uses Gaussian noise".into(),
                )),
            },
        }
    }
}

/// `(||x - y||_2^2, ||x - y||_4^4)`.
pub fn dist_norms(x: &[f64], y: &[f64]) -> (f64, f64) {
    x.iter().zip(y).fold((0.0, 0.0), |(a, b), (u, v)| {
        let z2 = (u - v) * (u - v);
        (a + z2, b + z2 * z2)
    })
}

/// `x = 0` and `y` a linear ramp `(1, 2, ..., d)` rescaled so that
/// `||x - y||^2 = dist_sq`.
pub fn ramp_pair(d: usize, dist_sq: f64) -> (Vec<f64>, Vec<f64>) {
    let raw: Vec<f64> = (1..=d).map(|j| j as f64).collect();
    let norm_sq: f64 = raw.iter().map(|v| v * v).sum();
    let scale = (dist_sq / norm_sq).sqrt();
    (vec![0.0; d], raw.into_iter().map(|v| v * scale).collect())
}
