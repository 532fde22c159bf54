//! Bias-corrected squared-distance estimators and their analytic variance.
//!
//! For two sketches `u = T x + eta` and `v = T y + mu` of an LPP-normalized
//! transform with i.i.d. symmetric noise,
//!
//! ```text
//! E[ ||u - v||^2 - 2k E[eta^2] ] = ||x - y||^2
//! Var = Var_T ||T z||^2 + 8 E[eta^2] ||z||^2 + 2k E[eta^4] + 2k E[eta^2]^2
//! ```
//!
//! with `z = x - y`. Input perturbation of the FJLT subtracts `2 d sigma^2`
//! instead, since the noise lives in the `d` input coordinates.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::privacy::{NoiseSpec, PerturbationSite, PrivateSketch};
use crate::transforms::TransformKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    SjltOut,
    FjltOut,
    FjltIn,
    IidOut,
}

impl Scheme {
    pub fn from_parts(kind: TransformKind, site: PerturbationSite) -> Result<Self> {
        match (kind, site) {
            (TransformKind::Sjlt, PerturbationSite::Output) => Ok(Scheme::SjltOut),
            (TransformKind::Fjlt, PerturbationSite::Output) => Ok(Scheme::FjltOut),
            (TransformKind::Fjlt, PerturbationSite::Input) => Ok(Scheme::FjltIn),
            (TransformKind::Iid, PerturbationSite::Output) => Ok(Scheme::IidOut),
            (kind, site) => Err(Error::SchemeMismatch(format!(
                "no estimator for {kind} with {site} perturbation"
            ))),
        }
    }

    pub fn site(&self) -> PerturbationSite {
        match self {
            Scheme::FjltIn => PerturbationSite::Input,
            _ => PerturbationSite::Output,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::SjltOut => "sjlt_out",
            Scheme::FjltOut => "fjlt_out",
            Scheme::FjltIn => "fjlt_in",
            Scheme::IidOut => "iid_out",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sjlt_out" => Ok(Scheme::SjltOut),
            "fjlt_out" => Ok(Scheme::FjltOut),
            "fjlt_in" => Ok(Scheme::FjltIn),
            "iid_out" => Ok(Scheme::IidOut),
            other => Err(Error::InvalidParameter(format!("unknown scheme {other:?}"))),
        }
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn double_factorial(n: u32) -> f64 {
    (1..=n).rev().step_by(2).map(f64::from).product()
}

/// `E[eta^n]`: `n! b^n` for Laplace, `(n-1)!! sigma^n` for Gaussian, 0 for odd `n`.
pub fn noise_moment(noise: &NoiseSpec, n: u32) -> f64 {
    if n % 2 == 1 {
        return 0.0;
    }
    if n == 0 {
        return 1.0;
    }
    match *noise {
        NoiseSpec::Laplace { b } => factorial(n) * b.powi(n as i32),
        NoiseSpec::Gaussian { sigma } => double_factorial(n - 1) * sigma.powi(n as i32),
    }
}

/// Amount subtracted from `||u - v||^2`. `d` is only read for `FjltIn`.
pub fn bias_term(scheme: Scheme, noise: &NoiseSpec, k: usize, d: usize) -> Result<f64> {
    match scheme {
        Scheme::FjltIn => match *noise {
            NoiseSpec::Gaussian { sigma } => Ok(2.0 * d as f64 * sigma * sigma),
            NoiseSpec::Laplace { .. } => Err(Error::SchemeMismatch(
                "input perturbation uses Gaussian noise".into(),
            )),
        },
        _ => Ok(2.0 * k as f64 * noise_moment(noise, 2)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceKind {
    Exact,
    Bound,
}

impl fmt::Display for VarianceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VarianceKind::Exact => "exact",
            VarianceKind::Bound => "bound",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariancePrediction {
    pub value: f64,
    pub kind: VarianceKind,
}

/// Noise contribution for output perturbation:
/// `8 E[eta^2] ||z||^2 + 2k E[eta^4] + 2k E[eta^2]^2`.
pub fn noise_variance_terms(noise: &NoiseSpec, k: usize, dist_sq: f64) -> f64 {
    let m2 = noise_moment(noise, 2);
    let m4 = noise_moment(noise, 4);
    let k = k as f64;
    8.0 * m2 * dist_sq + 2.0 * k * m4 + 2.0 * k * m2 * m2
}

/// Exact variance of `||(1/sqrt(k)) P H D v||^2` over `P` and `D` for a fixed
/// `v` of squared norm `norm_sq` and fourth-power sum `l4_pow4`.
pub fn fjlt_transform_variance(k: usize, q: f64, d_pad: usize, norm_sq: f64, l4_pow4: f64) -> f64 {
    let c = 1.0 / q - 1.0;
    let dp = d_pad as f64;
    ((2.0 + 9.0 * c / dp) * norm_sq * norm_sq - 6.0 * c / dp * l4_pow4) / k as f64
}

/// Exact variance of the input-perturbed FJLT estimator. The FJLT sees
/// `v = z + w` with `w ~ N(0, 2 sigma^2)^d`, and the estimator adds
/// `Var_w ||v||^2 = 8 sigma^2 ||z||^2 + 8 d sigma^4`.
pub fn fjlt_in_exact_variance(
    k: usize,
    q: f64,
    d: usize,
    d_pad: usize,
    sigma: f64,
    dist_sq: f64,
    dist_l4_pow4: f64,
) -> f64 {
    let tau2 = 2.0 * sigma * sigma;
    let df = d as f64;
    let e_norm4 = (dist_sq + df * tau2).powi(2) + 4.0 * tau2 * dist_sq + 2.0 * df * tau2 * tau2;
    let e_l4 = dist_l4_pow4 + 6.0 * tau2 * dist_sq + 3.0 * df * tau2 * tau2;
    let c = 1.0 / q - 1.0;
    let dp = d_pad as f64;
    let transform = ((2.0 + 9.0 * c / dp) * e_norm4 - 6.0 * c / dp * e_l4) / k as f64;
    transform + 8.0 * sigma * sigma * dist_sq + 8.0 * df * sigma.powi(4)
}

/// Analytic variance of the estimator for `||z||^2 = dist_sq`.
///
/// The transform term is `(2/k)(||z||^4 - ||z||_4^4)` for the SJLT (exact when
/// `dist_l4_pow4` is given, the `(2/k)||z||^4` bound otherwise),
/// `(2/k)||z||^4` for the i.i.d. baseline and the `(3/k)||z||^4` bound for
/// the FJLT. The FJLT bound assumes `q >= 1/(d_pad/9 + 1)`.
pub fn analytic_variance(
    scheme: Scheme,
    noise: &NoiseSpec,
    k: usize,
    d: usize,
    dist_sq: f64,
    dist_l4_pow4: Option<f64>,
) -> Result<VariancePrediction> {
    let kf = k as f64;
    let z4 = dist_sq * dist_sq;
    let pred = match scheme {
        Scheme::SjltOut => {
            let (t, kind) = match dist_l4_pow4 {
                Some(l4) => (2.0 / kf * (z4 - l4), VarianceKind::Exact),
                None => (2.0 / kf * z4, VarianceKind::Bound),
            };
            VariancePrediction {
                value: t + noise_variance_terms(noise, k, dist_sq),
                kind,
            }
        }
        Scheme::IidOut => VariancePrediction {
            value: 2.0 / kf * z4 + noise_variance_terms(noise, k, dist_sq),
            kind: VarianceKind::Exact,
        },
        Scheme::FjltOut => VariancePrediction {
            value: 3.0 / kf * z4 + noise_variance_terms(noise, k, dist_sq),
            kind: VarianceKind::Bound,
        },
        Scheme::FjltIn => {
            let NoiseSpec::Gaussian { sigma } = *noise else {
                return Err(Error::SchemeMismatch("input perturbation uses Gaussian noise".into()));
            };
            let s2 = sigma * sigma;
            let tau2 = 2.0 * s2;
            let df = d as f64;
            let e_norm4 = (dist_sq + df * tau2).powi(2) + 4.0 * tau2 * dist_sq + 2.0 * df * tau2 * tau2;
            VariancePrediction {
                value: 3.0 / kf * e_norm4 + 8.0 * s2 * dist_sq + 8.0 * df * s2 * s2,
                kind: VarianceKind::Bound,
            }
        }
    };
    Ok(pred)
}

/// Advisory output dimension `ceil(c_opt nu eps^2 / delta1^2)`.
pub fn optimal_k(nu: f64, epsilon: f64, delta1: f64, c_opt: f64) -> Result<usize> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::InvalidParameter(format!("nu must be positive, got {nu}")));
    }
    if !(epsilon > 0.0 && delta1 > 0.0 && c_opt > 0.0) {
        return Err(Error::InvalidParameter(
            "epsilon, delta1 and c_opt must be positive".into(),
        ));
    }
    Ok((c_opt * nu * epsilon * epsilon / (delta1 * delta1)).ceil().max(1.0) as usize)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub scheme: Scheme,
    pub k: usize,
    pub s: Option<usize>,
    pub epsilon: f64,
    pub delta: f64,
    /// May be negative.
    pub estimate: f64,
    pub bias_term: f64,
    pub analytic_variance: Option<f64>,
    pub variance_kind: Option<VarianceKind>,
}

pub const ESTIMATE_CSV_HEADER: &str =
    "scheme,k,s,epsilon,delta,estimate,bias_term,analytic_variance,variance_kind";

fn opt<T: fmt::Display>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl EstimateReport {
    /// `max(estimate, 0)`. Biased; for consumers that need a non-negative value.
    pub fn clamped(&self) -> f64 {
        self.estimate.max(0.0)
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.scheme,
            self.k,
            opt(self.s),
            self.epsilon,
            self.delta,
            self.estimate,
            self.bias_term,
            opt(self.analytic_variance),
            opt(self.variance_kind),
        )
    }
}

fn check_values(values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidVector("sketch values must be finite".into()));
    }
    Ok(())
}

/// `||a - b||^2 - bias`. Errors if the sketches cannot be paired.
///
/// The report's variance fields are left empty; see [`plug_in_variance`].
pub fn estimate_sqdist(a: &PrivateSketch, b: &PrivateSketch) -> Result<EstimateReport> {
    a.check_combinable(b)?;
    check_values(&a.values)?;
    check_values(&b.values)?;
    let scheme = Scheme::from_parts(a.transform_kind, a.site)?;
    let k = a.values.len();
    let bias = bias_term(scheme, &a.noise, k, a.input_dim)?;
    let raw: f64 = a.values.iter().zip(&b.values).map(|(u, v)| (u - v) * (u - v)).sum();
    Ok(EstimateReport {
        scheme,
        k,
        s: a.sparsity,
        epsilon: a.epsilon,
        delta: a.delta,
        estimate: raw - bias,
        bias_term: bias,
        analytic_variance: None,
        variance_kind: None,
    })
}

/// Fills the variance fields by evaluating [`analytic_variance`] at the
/// clamped estimate. Without the true distance this is only a plug-in value,
/// and the SJLT term falls back to its bound.
pub fn plug_in_variance(report: &mut EstimateReport, noise: &NoiseSpec, d: usize) -> Result<()> {
    let pred = analytic_variance(report.scheme, noise, report.k, d, report.clamped(), None)?;
    report.analytic_variance = Some(pred.value);
    report.variance_kind = Some(pred.kind);
    Ok(())
}

/// Estimate from raw values; used by simulations that skip the sketch wrapper.
pub fn estimate_from_values(u: &[f64], v: &[f64], bias: f64) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() - bias
}
