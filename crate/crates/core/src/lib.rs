//! Differentially private Johnson-Lindenstrauss sketches.
//!
//! A sketch is `T x + eta` for a seeded LPP-normalized projection `T`
//! (sparse block SJLT, fast JL transform, or a dense i.i.d. Gaussian
//! baseline) and Laplace or Gaussian noise calibrated to the exact column
//! sensitivity of `T`. Two sketches made with the same transform and noise
//! give an unbiased estimate of `||x - y||^2` after subtracting the expected
//! noise energy.
//!
//! ```
//! use dpjl::{privacy, rng::Rng, transforms::*, estimators};
//!
//! let params = SketchParams::with_defaults(0.25, 0.25, 64).unwrap();
//! let t: Transform = SjltTransform::new(&params, 7, HashMode::Prf).unwrap().into();
//! let pp = privacy::PrivacyParams::new(1.0, 1e-6).unwrap();
//! let x = vec![1.0; 64];
//! let y = vec![0.0; 64];
//! let mut rng = Rng::new(1, 0);
//! let (a, _) = privacy::privatize_calibrated(&t, &x, &pp, None, &mut rng).unwrap();
//! let (b, _) = privacy::privatize_calibrated(&t, &y, &pp, None, &mut rng).unwrap();
//! let report = estimators::estimate_sqdist(&a, &b).unwrap();
//! assert!(report.estimate.is_finite());
//! ```
//!
//! Noise is sampled in floating point from continuous distributions. Such
//! samplers are known to leak through the low-order bits of their output;
//! no discretization is attempted here.

pub mod error;
pub mod estimators;
pub mod hadamard;
pub mod noise;
pub mod oracle;
pub mod privacy;
pub mod rng;
pub mod simulate;
pub mod transforms;

pub use error::{Error, Result};
