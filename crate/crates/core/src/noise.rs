//! Continuous noise samplers.
//!
//! Both samplers work on IEEE doubles and inherit the usual floating-point
//! caveat for continuous mechanisms: the set of representable outputs is not
//! closed under shifts, so the privacy guarantee is the idealized one.

use crate::error::{Error, Result};
use crate::rng::Rng;

fn check_scale(scale: f64) -> Result<()> {
    if scale > 0.0 && scale.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidScale(scale))
    }
}

/// Inverse CDF of `Lap(0, b)` evaluated at `u` in `(-1/2, 1/2)`.
pub fn laplace_from_uniform(u: f64, b: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// One draw from `Lap(0, b)`.
pub fn sample_laplace(b: f64, rng: &mut Rng) -> Result<f64> {
    check_scale(b)?;
    let u = rng.open_uniform() - 0.5;
    Ok(laplace_from_uniform(u, b))
}

/// One draw from `N(0, sigma^2)` using the Marsaglia polar method.
///
/// The polar method yields two independent normals per accepted pair; the
/// second one is kept on the stream and returned by the next call.
pub fn sample_gaussian(sigma: f64, rng: &mut Rng) -> Result<f64> {
    check_scale(sigma)?;
    Ok(sigma * standard_normal(rng))
}

pub(crate) fn standard_normal(rng: &mut Rng) -> f64 {
    if let Some(z) = rng.take_spare_normal() {
        return z;
    }
    loop {
        let u = 2.0 * rng.uniform() - 1.0;
        let v = 2.0 * rng.uniform() - 1.0;
        let r2 = u * u + v * v;
        if r2 > 0.0 && r2 < 1.0 {
            let factor = (-2.0 * r2.ln() / r2).sqrt();
            rng.set_spare_normal(v * factor);
            return u * factor;
        }
    }
}
