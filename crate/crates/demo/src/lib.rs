//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export returns a JSON string so the page needs no generated
//! TypeScript types. The `*_json` functions are plain Rust and are what the
//! native tests exercise.

use dpjl::estimators::noise_variance_terms;
use dpjl::oracle::{mc_samples, summarize};
use dpjl::privacy::{
    calibrate, laplace_threshold, select_mechanism, Mechanism, NoiseSpec, PrivacyParams,
};
use dpjl::simulate::{ramp_pair, NoisePolicy, SchemeConfig};
use dpjl::transforms::{HashMode, Norm, SjltTransform, Transform};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Hard cap on Monte-Carlo trials per call so the page stays responsive.
pub const MAX_TRIALS: usize = 200_000;

/// Analytic noise contribution to the estimator variance for SJLT sketches
/// with Laplace and with Gaussian noise, on a log-spaced delta grid.
pub fn crossover_json(
    s: usize,
    k: usize,
    epsilon: f64,
    dist_sq: f64,
    log10_delta_min: f64,
    log10_delta_max: f64,
    points: usize,
) -> dpjl::Result<Value> {
    // Building a transform validates (k, s); its sensitivities are structural.
    let sens =
        Transform::from(SjltTransform::with_dims(1, k, s, 0, HashMode::Prf)?).sensitivities();
    let points = points.clamp(2, 400);
    let mut rows = Vec::with_capacity(points);
    for i in 0..points {
        let t = i as f64 / (points - 1) as f64;
        let delta = 10f64.powf(log10_delta_min + t * (log10_delta_max - log10_delta_min));
        let pp = PrivacyParams::new(epsilon, delta)?;
        let lap = calibrate(&sens, &pp, Some(Mechanism::Laplace))?.noise;
        let gauss = calibrate(&sens, &pp, Some(Mechanism::Gaussian))?.noise;
        rows.push(json!({
            "delta": delta,
            "laplace": noise_variance_terms(&lap, k, dist_sq),
            "gaussian": noise_variance_terms(&gauss, k, dist_sq),
            "b": lap.scale(),
            "sigma": gauss.scale(),
            "selected": select_mechanism(&sens, &pp).to_string(),
        }));
    }
    Ok(json!({
        "s": s,
        "k": k,
        "delta1": sens.delta1,
        "delta2": sens.delta2,
        "threshold": laplace_threshold(&sens),
        "points": rows,
    }))
}

/// Monte-Carlo estimates of a known squared distance with SJLT sketches,
/// binned for a histogram.
#[allow(clippy::too_many_arguments)]
pub fn histogram_json(
    d: usize,
    k: usize,
    s: usize,
    epsilon: f64,
    delta: f64,
    dist_sq: f64,
    trials: usize,
    bins: usize,
    seed: u64,
) -> dpjl::Result<Value> {
    let pp = PrivacyParams::new(epsilon, delta)?;
    let base = SchemeConfig::sjlt(
        d,
        k,
        s,
        NoisePolicy::PerTransform {
            privacy: pp,
            mechanism: None,
        },
    );
    let noise: NoiseSpec = base.reference_noise(seed)?;
    let cfg = SchemeConfig {
        noise: NoisePolicy::Fixed(noise),
        ..base
    };
    let (x, y) = ramp_pair(d, dist_sq);
    let analytic = cfg.analytic(&noise, &x, &y)?.value;
    let trials = trials.clamp(dpjl::oracle::MIN_TRIALS, MAX_TRIALS);
    let samples = mc_samples(
        |rng| cfg.trial(&x, &y, rng).expect("validated above"),
        trials,
        seed,
        "demo",
    );
    let summary = summarize(&samples);

    let bins = bins.clamp(5, 200);
    let sd = analytic.sqrt();
    let (lo, hi) = (dist_sq - 4.0 * sd, dist_sq + 4.0 * sd);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    let mut outside = 0u64;
    for v in &samples {
        let i = ((v - lo) / width).floor();
        if i >= 0.0 && (i as usize) < bins {
            counts[i as usize] += 1;
        } else {
            outside += 1;
        }
    }
    Ok(json!({
        "mechanism": noise.mechanism().to_string(),
        "scale": noise.scale(),
        "trials": trials,
        "true": dist_sq,
        "mean": summary.mean,
        "variance": summary.variance,
        "analytic_variance": analytic,
        "lo": lo,
        "width": width,
        "counts": counts,
        "outside": outside,
    }))
}

/// Non-zero pattern of a small SJLT and its column norms.
pub fn pattern_json(d: usize, k: usize, s: usize, seed: u64) -> dpjl::Result<Value> {
    if d > 512 || k > 512 {
        return Err(dpjl::Error::InvalidParameter(
            "demo pattern is limited to 512 x 512".into(),
        ));
    }
    let t = SjltTransform::with_dims(d, k, s, seed, HashMode::Prf)?;
    let mut cells = Vec::with_capacity(d * s);
    let mut l1 = Vec::with_capacity(d);
    let mut l2 = Vec::with_capacity(d);
    for j in 0..d {
        let col = t.column(j);
        l1.push(col.iter().map(|(_, v)| v.abs()).sum::<f64>());
        l2.push(col.iter().map(|(_, v)| v * v).sum::<f64>().sqrt());
        cells.extend(col.into_iter().map(|(row, v)| json!([row, j, v.signum()])));
    }
    Ok(json!({
        "d": d,
        "k": k,
        "s": s,
        "block_len": t.block_len(),
        "cells": cells,
        "l1": l1,
        "l2": l2,
        "delta1": t.column_sensitivity(Norm::L1),
        "delta2": t.column_sensitivity(Norm::L2),
    }))
}

fn to_js(r: dpjl::Result<Value>) -> Result<String, JsError> {
    r.map(|v| v.to_string())
        .map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn crossover(
    s: usize,
    k: usize,
    epsilon: f64,
    dist_sq: f64,
    log10_delta_min: f64,
    log10_delta_max: f64,
    points: usize,
) -> Result<String, JsError> {
    to_js(crossover_json(
        s,
        k,
        epsilon,
        dist_sq,
        log10_delta_min,
        log10_delta_max,
        points,
    ))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn histogram(
    d: usize,
    k: usize,
    s: usize,
    epsilon: f64,
    delta: f64,
    dist_sq: f64,
    trials: usize,
    bins: usize,
    seed: u32,
) -> Result<String, JsError> {
    to_js(histogram_json(
        d,
        k,
        s,
        epsilon,
        delta,
        dist_sq,
        trials,
        bins,
        seed as u64,
    ))
}

#[wasm_bindgen]
pub fn pattern(d: usize, k: usize, s: usize, seed: u32) -> Result<String, JsError> {
    to_js(pattern_json(d, k, s, seed as u64))
}
