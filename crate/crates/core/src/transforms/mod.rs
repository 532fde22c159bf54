//! The three JL transforms and their on-disk descriptor format.
//!
//! All transforms are LPP-normalized: `E ||T x||^2 = ||x||^2` over the
//! transform's randomness. Descriptors serialize to a JSON object tagged by
//! `type`; SJLT and i.i.d. transforms are rebuilt from their seed, the FJLT
//! persists its sign diagonal and the realized sparse rows of `P`.

mod fjlt;
mod iid;
mod params;
mod sjlt;

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::privacy::SensitivityPair;

pub use fjlt::{sparsity_probability, FjltTransform, SparseRow};
pub use iid::IidGaussianTransform;
pub use params::{SketchParams, DEFAULT_C_K, DEFAULT_C_Q, DEFAULT_C_S};
pub use sjlt::{HashMode, SjltTransform};

/// Column norm used for sensitivity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    Sjlt,
    Fjlt,
    Iid,
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransformKind::Sjlt => "sjlt",
            TransformKind::Fjlt => "fjlt",
            TransformKind::Iid => "iid",
        })
    }
}

impl std::str::FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sjlt" => Ok(TransformKind::Sjlt),
            "fjlt" => Ok(TransformKind::Fjlt),
            "iid" => Ok(TransformKind::Iid),
            other => Err(Error::InvalidParameter(format!("unknown transform type {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Transform {
    Sjlt(SjltTransform),
    Fjlt(FjltTransform),
    Iid(IidGaussianTransform),
}

/// Constants the transform was derived with; informational.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub c_k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub c_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub c_q: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Descriptor {
    Sjlt {
        d: usize,
        k: usize,
        s: usize,
        seed: u64,
        hash_mode: HashMode,
        constants: Constants,
    },
    Fjlt {
        d: usize,
        k: usize,
        q: f64,
        seed: u64,
        constants: Constants,
        d_pad: usize,
        d_signs: Vec<i8>,
        p_rows: Vec<SparseRow>,
    },
    Iid {
        d: usize,
        k: usize,
        seed: u64,
        constants: Constants,
    },
}

impl Transform {
    pub fn kind(&self) -> TransformKind {
        match self {
            Transform::Sjlt(_) => TransformKind::Sjlt,
            Transform::Fjlt(_) => TransformKind::Fjlt,
            Transform::Iid(_) => TransformKind::Iid,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Transform::Sjlt(t) => t.d(),
            Transform::Fjlt(t) => t.d(),
            Transform::Iid(t) => t.d(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Transform::Sjlt(t) => t.k(),
            Transform::Fjlt(t) => t.k(),
            Transform::Iid(t) => t.k(),
        }
    }

    /// SJLT sparsity, if this is an SJLT.
    pub fn sparsity(&self) -> Option<usize> {
        match self {
            Transform::Sjlt(t) => Some(t.s()),
            _ => None,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Transform::Sjlt(t) => t.seed(),
            Transform::Fjlt(t) => t.seed(),
            Transform::Iid(t) => t.seed(),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Transform::Sjlt(t) => t.apply(x),
            Transform::Fjlt(t) => t.apply(x),
            Transform::Iid(t) => t.apply(x),
        }
    }

    /// Exact `max_j ||T[:, j]||_p`.
    pub fn column_sensitivity(&self, norm: Norm) -> f64 {
        match self {
            Transform::Sjlt(t) => t.column_sensitivity(norm),
            Transform::Fjlt(t) => t.column_sensitivity(norm),
            Transform::Iid(t) => t.column_sensitivity(norm),
        }
    }

    pub fn sensitivities(&self) -> SensitivityPair {
        SensitivityPair::new(
            self.column_sensitivity(Norm::L1),
            self.column_sensitivity(Norm::L2),
        )
    }

    fn descriptor(&self, constants: Constants) -> Descriptor {
        match self {
            Transform::Sjlt(t) => Descriptor::Sjlt {
                d: t.d(),
                k: t.k(),
                s: t.s(),
                seed: t.seed(),
                hash_mode: t.hash_mode(),
                constants,
            },
            Transform::Fjlt(t) => Descriptor::Fjlt {
                d: t.d(),
                k: t.k(),
                q: t.q(),
                seed: t.seed(),
                constants: Constants {
                    alpha: Some(t.alpha()),
                    beta: Some(t.beta()),
                    c_q: Some(t.c_q()),
                    ..constants
                },
                d_pad: t.d_pad(),
                d_signs: t.signs().iter().map(|&s| if s > 0.0 { 1 } else { -1 }).collect(),
                p_rows: t.rows().to_vec(),
            },
            Transform::Iid(t) => Descriptor::Iid {
                d: t.d(),
                k: t.k(),
                seed: t.seed(),
                constants,
            },
        }
    }

    /// Serializes the descriptor; `constants` records how it was derived.
    pub fn to_json_with(&self, constants: Constants) -> Result<String> {
        Ok(serde_json::to_string(&self.descriptor(constants))?)
    }

    pub fn to_json(&self) -> Result<String> {
        self.to_json_with(Constants::default())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(Self::from_json_with_constants(text)?.0)
    }

    pub fn from_json_with_constants(text: &str) -> Result<(Self, Constants)> {
        let descriptor: Descriptor = serde_json::from_str(text)?;
        Ok(match descriptor {
            Descriptor::Sjlt {
                d,
                k,
                s,
                seed,
                hash_mode,
                constants,
            } => (
                Transform::Sjlt(SjltTransform::with_dims(d, k, s, seed, hash_mode)?),
                constants,
            ),
            Descriptor::Fjlt {
                d,
                k,
                q,
                seed,
                constants,
                d_pad,
                d_signs,
                p_rows,
            } => {
                if d_pad != d.next_power_of_two() {
                    return Err(Error::Serialization(format!(
                        "d_pad {d_pad} does not match d {d}"
                    )));
                }
                let signs = d_signs.into_iter().map(f64::from).collect();
                let t = FjltTransform::from_parts(
                    d,
                    k,
                    q,
                    constants.c_q.unwrap_or(DEFAULT_C_Q),
                    constants.alpha.unwrap_or(f64::NAN),
                    constants.beta.unwrap_or(f64::NAN),
                    seed,
                    signs,
                    p_rows,
                )?;
                (Transform::Fjlt(t), constants)
            }
            Descriptor::Iid { d, k, seed, constants } => {
                (Transform::Iid(IidGaussianTransform::new(d, k, seed)?), constants)
            }
        })
    }

    /// Hex SHA-256 of the canonical descriptor (without constants).
    pub fn fingerprint(&self) -> String {
        let canonical = self.to_json().expect("descriptor serialization cannot fail");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl From<SjltTransform> for Transform {
    fn from(t: SjltTransform) -> Self {
        Transform::Sjlt(t)
    }
}

impl From<FjltTransform> for Transform {
    fn from(t: FjltTransform) -> Self {
        Transform::Fjlt(t)
    }
}

impl From<IidGaussianTransform> for Transform {
    fn from(t: IidGaussianTransform) -> Self {
        Transform::Iid(t)
    }
}
