//! Noise calibration, mechanism selection and private sketches.
//!
//! Output perturbation releases `T x + eta` with `eta` drawn i.i.d. from a
//! Laplace or Gaussian distribution calibrated to the exact column
//! sensitivity of `T`. Input perturbation (FJLT only) releases
//! `T (x + eta)` with `eta ~ N(0, sigma^2)^d`; its sensitivity is 1 because
//! the noise is added before the projection.
//!
//! Noise is drawn fresh on every call. Re-privatizing the same input spends
//! privacy budget again; nothing here tracks composition.

use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{sample_gaussian, sample_laplace};
use crate::rng::Rng;
use crate::transforms::{Transform, TransformKind};

pub const SKETCH_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrivacyParams {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidPrivacy(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::InvalidPrivacy(format!("delta must lie in [0, 1), got {delta}")));
        }
        Ok(Self { epsilon, delta })
    }

    pub fn pure(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, 0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    Laplace,
    Gaussian,
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mechanism::Laplace => "laplace",
            Mechanism::Gaussian => "gaussian",
        })
    }
}

impl std::str::FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "laplace" => Ok(Mechanism::Laplace),
            "gaussian" => Ok(Mechanism::Gaussian),
            other => Err(Error::InvalidParameter(format!("unknown mechanism {other:?}"))),
        }
    }
}

/// Per-coordinate noise distribution. A zero scale means no noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseSpec {
    Laplace { b: f64 },
    Gaussian { sigma: f64 },
}

impl NoiseSpec {
    pub fn mechanism(&self) -> Mechanism {
        match self {
            NoiseSpec::Laplace { .. } => Mechanism::Laplace,
            NoiseSpec::Gaussian { .. } => Mechanism::Gaussian,
        }
    }

    pub fn scale(&self) -> f64 {
        match *self {
            NoiseSpec::Laplace { b } => b,
            NoiseSpec::Gaussian { sigma } => sigma,
        }
    }

    pub fn from_parts(mechanism: Mechanism, scale: f64) -> Self {
        match mechanism {
            Mechanism::Laplace => NoiseSpec::Laplace { b: scale },
            Mechanism::Gaussian => NoiseSpec::Gaussian { sigma: scale },
        }
    }

    /// One draw; exactly 0 when the scale is 0.
    pub fn sample(&self, rng: &mut Rng) -> Result<f64> {
        if self.scale() == 0.0 {
            return Ok(0.0);
        }
        match *self {
            NoiseSpec::Laplace { b } => sample_laplace(b, rng),
            NoiseSpec::Gaussian { sigma } => sample_gaussian(sigma, rng),
        }
    }

    pub fn add_to(&self, values: &mut [f64], rng: &mut Rng) -> Result<()> {
        for v in values.iter_mut() {
            *v += self.sample(rng)?;
        }
        Ok(())
    }
}

/// l1 and l2 column sensitivities of a linear map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensitivityPair {
    pub delta1: f64,
    pub delta2: f64,
}

impl SensitivityPair {
    pub fn new(delta1: f64, delta2: f64) -> Self {
        Self { delta1, delta2 }
    }

    /// `min(delta1, delta2 sqrt(ln(1/delta)))`; `delta1` when `delta = 0`.
    pub fn m(&self, delta: f64) -> f64 {
        if delta <= 0.0 {
            self.delta1
        } else {
            self.delta1.min(self.gaussian_effective(delta))
        }
    }

    fn gaussian_effective(&self, delta: f64) -> f64 {
        self.delta2 * (1.0 / delta).ln().sqrt()
    }
}

/// Laplace when `delta1 <= delta2 sqrt(ln(1/delta))` (ties go to Laplace),
/// or when `delta = 0`; Gaussian otherwise.
pub fn select_mechanism(sens: &SensitivityPair, pp: &PrivacyParams) -> Mechanism {
    if pp.delta == 0.0 || sens.delta1 <= sens.gaussian_effective(pp.delta) {
        Mechanism::Laplace
    } else {
        Mechanism::Gaussian
    }
}

/// The same rule written as a threshold on delta: `delta <= exp(-delta1^2 / delta2^2)`.
pub fn laplace_threshold(sens: &SensitivityPair) -> f64 {
    if sens.delta2 == 0.0 {
        return 1.0;
    }
    (-(sens.delta1 * sens.delta1) / (sens.delta2 * sens.delta2)).exp()
}

/// `b = delta1 / epsilon`. A zero sensitivity gives `b = 0` (no noise).
pub fn calibrate_laplace(delta1: f64, epsilon: f64) -> Result<NoiseSpec> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidPrivacy(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(delta1 >= 0.0 && delta1.is_finite()) {
        return Err(Error::InvalidPrivacy(format!("sensitivity must be non-negative, got {delta1}")));
    }
    Ok(NoiseSpec::Laplace { b: delta1 / epsilon })
}

/// `delta2 / epsilon * sqrt(2 ln(1.25 / delta))`.
pub fn gaussian_sigma_floor(delta2: f64, epsilon: f64, delta: f64) -> f64 {
    delta2 / epsilon * (2.0 * (1.25 / delta).ln()).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianCalibration {
    pub noise: NoiseSpec,
    /// Set when `epsilon >= 1`, outside the range the calibration formula is
    /// usually stated for.
    pub epsilon_regime_warning: bool,
}

pub fn calibrate_gaussian(delta2: f64, epsilon: f64, delta: f64) -> Result<GaussianCalibration> {
    if delta == 0.0 {
        return Err(Error::GaussianNeedsDelta);
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidPrivacy(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidPrivacy(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(delta2 >= 0.0 && delta2.is_finite()) {
        return Err(Error::InvalidPrivacy(format!("sensitivity must be non-negative, got {delta2}")));
    }
    Ok(GaussianCalibration {
        noise: NoiseSpec::Gaussian {
            sigma: gaussian_sigma_floor(delta2, epsilon, delta),
        },
        epsilon_regime_warning: epsilon >= 1.0,
    })
}

/// Result of choosing and calibrating a mechanism for a transform.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Calibration {
    pub noise: NoiseSpec,
    pub epsilon_regime_warning: bool,
}

/// Calibrates `mechanism`, or the one [`select_mechanism`] picks when `None`.
pub fn calibrate(
    sens: &SensitivityPair,
    pp: &PrivacyParams,
    mechanism: Option<Mechanism>,
) -> Result<Calibration> {
    match mechanism.unwrap_or_else(|| select_mechanism(sens, pp)) {
        Mechanism::Laplace => Ok(Calibration {
            noise: calibrate_laplace(sens.delta1, pp.epsilon)?,
            epsilon_regime_warning: false,
        }),
        Mechanism::Gaussian => {
            let g = calibrate_gaussian(sens.delta2, pp.epsilon, pp.delta)?;
            Ok(Calibration {
                noise: g.noise,
                epsilon_regime_warning: g.epsilon_regime_warning,
            })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbationSite {
    Output,
    Input,
}

impl fmt::Display for PerturbationSite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PerturbationSite::Output => "output",
            PerturbationSite::Input => "input",
        })
    }
}

impl std::str::FromStr for PerturbationSite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "output" => Ok(PerturbationSite::Output),
            "input" => Ok(PerturbationSite::Input),
            other => Err(Error::InvalidParameter(format!("unknown perturbation site {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// `E ||T x||^2 = ||x||^2`.
    Lpp,
}

/// Released sketch plus what is needed to pair and bias-correct it.
#[derive(Clone, Debug, PartialEq)]
pub struct PrivateSketch {
    pub values: Vec<f64>,
    pub transform_fingerprint: String,
    pub transform_kind: TransformKind,
    pub input_dim: usize,
    pub sparsity: Option<usize>,
    pub noise: NoiseSpec,
    pub site: PerturbationSite,
    pub epsilon: f64,
    pub delta: f64,
    pub normalization: Normalization,
}

#[derive(Serialize, Deserialize)]
struct SketchHeader {
    version: u32,
    transform_fingerprint: String,
    transform: TransformKind,
    d: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    s: Option<usize>,
    kind: Mechanism,
    scale: f64,
    site: PerturbationSite,
    epsilon: f64,
    delta: f64,
    k: usize,
    normalization: Normalization,
    pure_dp: bool,
}

impl PrivateSketch {
    pub fn k(&self) -> usize {
        self.values.len()
    }

    /// Pure DP iff the noise is Laplace.
    pub fn is_pure_dp(&self) -> bool {
        self.noise.mechanism() == Mechanism::Laplace
    }

    /// Errors with the first mismatching field.
    pub fn check_combinable(&self, other: &PrivateSketch) -> Result<()> {
        let mismatch = |field, left: String, right: String| {
            Err(Error::IncompatibleSketches { field, left, right })
        };
        if self.transform_fingerprint != other.transform_fingerprint {
            return mismatch(
                "transform_fingerprint",
                self.transform_fingerprint.clone(),
                other.transform_fingerprint.clone(),
            );
        }
        if self.noise.mechanism() != other.noise.mechanism() {
            return mismatch("kind", self.noise.mechanism().to_string(), other.noise.mechanism().to_string());
        }
        if self.noise.scale().to_bits() != other.noise.scale().to_bits() {
            return mismatch("scale", self.noise.scale().to_string(), other.noise.scale().to_string());
        }
        if self.site != other.site {
            return mismatch("site", self.site.to_string(), other.site.to_string());
        }
        if self.normalization != other.normalization {
            return mismatch("normalization", "lpp".into(), "lpp".into());
        }
        if self.values.len() != other.values.len() {
            return mismatch("k", self.values.len().to_string(), other.values.len().to_string());
        }
        Ok(())
    }

    /// Writes the header object on the first line and the values array on
    /// the second.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let header = SketchHeader {
            version: SKETCH_FORMAT_VERSION,
            transform_fingerprint: self.transform_fingerprint.clone(),
            transform: self.transform_kind,
            d: self.input_dim,
            s: self.sparsity,
            kind: self.noise.mechanism(),
            scale: self.noise.scale(),
            site: self.site,
            epsilon: self.epsilon,
            delta: self.delta,
            k: self.values.len(),
            normalization: self.normalization,
            pure_dp: self.is_pure_dp(),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        serde_json::to_writer(&mut w, &self.values)?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().filter(|l| !matches!(l, Ok(s) if s.trim().is_empty()));
        let mut next = |what: &str| -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Serialization(format!("sketch file is missing the {what}")))?
                .map_err(Error::from)
        };
        let header: SketchHeader = serde_json::from_str(&next("header")?)?;
        let values: Vec<f64> = serde_json::from_str(&next("values array")?)?;
        if header.version != SKETCH_FORMAT_VERSION {
            return Err(Error::Serialization(format!("unsupported sketch version {}", header.version)));
        }
        if values.len() != header.k {
            return Err(Error::Serialization(format!(
                "header declares k = {} but {} values follow",
                header.k,
                values.len()
            )));
        }
        Ok(Self {
            values,
            transform_fingerprint: header.transform_fingerprint,
            transform_kind: header.transform,
            input_dim: header.d,
            sparsity: header.s,
            noise: NoiseSpec::from_parts(header.kind, header.scale),
            site: header.site,
            epsilon: header.epsilon,
            delta: header.delta,
            normalization: header.normalization,
        })
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::read_from(text.as_bytes())
    }
}

fn sketch_shell(t: &Transform, values: Vec<f64>, noise: NoiseSpec, site: PerturbationSite, pp: &PrivacyParams) -> PrivateSketch {
    PrivateSketch {
        values,
        transform_fingerprint: t.fingerprint(),
        transform_kind: t.kind(),
        input_dim: t.input_dim(),
        sparsity: t.sparsity(),
        noise,
        site,
        epsilon: pp.epsilon,
        delta: pp.delta,
        normalization: Normalization::Lpp,
    }
}

/// Output perturbation: `T x + eta`, `eta_i` i.i.d. from `noise`.
///
/// `noise` is expected to be calibrated against `t`'s sensitivities; see
/// [`privatize_calibrated`].
pub fn privatize(
    t: &Transform,
    x: &[f64],
    noise: &NoiseSpec,
    pp: &PrivacyParams,
    rng: &mut Rng,
) -> Result<PrivateSketch> {
    let mut values = t.apply(x)?;
    noise.add_to(&mut values, rng)?;
    Ok(sketch_shell(t, values, *noise, PerturbationSite::Output, pp))
}

/// Computes `t`'s exact sensitivities, calibrates (selecting the mechanism
/// unless one is forced) and privatizes.
pub fn privatize_calibrated(
    t: &Transform,
    x: &[f64],
    pp: &PrivacyParams,
    mechanism: Option<Mechanism>,
    rng: &mut Rng,
) -> Result<(PrivateSketch, Calibration)> {
    let calibration = calibrate(&t.sensitivities(), pp, mechanism)?;
    let sketch = privatize(t, x, &calibration.noise, pp, rng)?;
    Ok((sketch, calibration))
}

/// Input perturbation for the FJLT: `(1/sqrt(k)) Phi (x + eta)` with
/// `eta ~ N(0, sigma^2)^d` added before padding.
pub fn privatize_input_fjlt(
    t: &Transform,
    x: &[f64],
    sigma: f64,
    pp: &PrivacyParams,
    rng: &mut Rng,
) -> Result<PrivateSketch> {
    let Transform::Fjlt(fjlt) = t else {
        return Err(Error::SchemeMismatch(format!(
            "input perturbation is defined for the FJLT only, got {}",
            t.kind()
        )));
    };
    if x.len() != fjlt.d() {
        return Err(Error::DimMismatch {
            expected: fjlt.d(),
            got: x.len(),
        });
    }
    if pp.delta == 0.0 {
        return Err(Error::GaussianNeedsDelta);
    }
    let floor = gaussian_sigma_floor(1.0, pp.epsilon, pp.delta);
    if !(sigma >= floor) {
        return Err(Error::InvalidScale(sigma));
    }
    let noise = NoiseSpec::Gaussian { sigma };
    let mut noisy = x.to_vec();
    noise.add_to(&mut noisy, rng)?;
    let values = fjlt.apply(&noisy)?;
    Ok(sketch_shell(t, values, noise, PerturbationSite::Input, pp))
}
