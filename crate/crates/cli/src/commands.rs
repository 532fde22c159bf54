use std::fs::File;
use std::io::BufReader;

use dpjl::estimators::{estimate_sqdist, plug_in_variance, ESTIMATE_CSV_HEADER};
use dpjl::oracle::{enumerate_sjlt_moments, Statistic};
use dpjl::privacy::{
    calibrate, gaussian_sigma_floor, privatize, privatize_input_fjlt, Mechanism, NoiseSpec,
    PerturbationSite, PrivacyParams, PrivateSketch,
};
use dpjl::rng::{content_id, Rng};
use dpjl::transforms::{
    Constants, FjltTransform, HashMode, IidGaussianTransform, SjltTransform, SketchParams, Transform,
    TransformKind,
};

use crate::error::{CliError, CliResult};
use crate::io::{parse_list, read_text, read_vector, write_output};
use crate::{resolve_seed, EstimateArgs, GenTransformArgs, MechanismArg, OracleCheckArgs, SiteArg, SketchArgs};

fn parse_hash_mode(s: &str) -> CliResult<HashMode> {
    if s == "prf" {
        return Ok(HashMode::Prf);
    }
    s.strip_prefix("poly:")
        .and_then(|t| t.parse().ok())
        .map(|independence| HashMode::Polynomial { independence })
        .ok_or_else(|| CliError::Usage(format!("--hash must be prf or poly:T, got {s:?}")))
}

/// One-line `key=value` description of a transform.
pub fn describe(t: &Transform) -> String {
    let sens = t.sensitivities();
    let mut line = format!("type={} d={} k={}", t.kind(), t.input_dim(), t.output_dim());
    match t {
        Transform::Sjlt(s) => line += &format!(" s={}", s.s()),
        Transform::Fjlt(f) => line += &format!(" d_pad={} q={} nnz={}", f.d_pad(), f.q(), f.nnz()),
        Transform::Iid(_) => {}
    }
    line += &format!(" delta1={} delta2={} fingerprint={}", sens.delta1, sens.delta2, t.fingerprint());
    line
}

pub fn build_transform(a: &GenTransformArgs, seed: u64) -> CliResult<(Transform, Constants)> {
    let params = SketchParams::from_accuracy(a.alpha, a.beta, a.dim, a.c_k, a.c_s)?;
    if a.kind != TransformKind::Sjlt && a.s.is_some() {
        return Err(CliError::Usage("--s applies to --type sjlt only".into()));
    }
    let mut constants = Constants {
        alpha: Some(a.alpha),
        beta: Some(a.beta),
        c_k: Some(a.c_k),
        ..Constants::default()
    };
    let t: Transform = match a.kind {
        TransformKind::Sjlt => {
            let p = params.with_dimensions(a.k, a.s)?;
            constants.c_s = Some(a.c_s);
            SjltTransform::new(&p, seed, parse_hash_mode(&a.hash)?)?.into()
        }
        TransformKind::Fjlt => {
            let k = a.k.unwrap_or_else(|| params.unrounded_k());
            constants.c_q = Some(a.c_q);
            FjltTransform::new(a.alpha, a.beta, a.dim, k, a.c_q, seed)?.into()
        }
        TransformKind::Iid => {
            let k = a.k.unwrap_or_else(|| params.unrounded_k());
            IidGaussianTransform::new(a.dim, k, seed)?.into()
        }
    };
    Ok((t, constants))
}

pub fn gen_transform(a: &GenTransformArgs) -> CliResult<()> {
    let seed = resolve_seed(a.seed)?;
    let (t, constants) = build_transform(a, seed)?;
    let mut json = t.to_json_with(constants)?;
    json.push('\n');
    write_output(a.out.as_deref(), json.as_bytes())?;
    let summary = describe(&t);
    if a.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}

pub fn load_transform(path: &std::path::Path) -> CliResult<Transform> {
    Ok(Transform::from_json(&read_text(path)?)?)
}

pub fn load_sketch(path: &std::path::Path) -> CliResult<PrivateSketch> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(PrivateSketch::read_from(BufReader::new(file))?)
}

/// The sketch `cmd sketch` would write, plus a log line.
pub fn make_sketch(
    t: &Transform,
    x: &[f64],
    a: &SketchArgs,
    seed: u64,
) -> CliResult<(PrivateSketch, Vec<String>)> {
    if x.len() != t.input_dim() {
        return Err(dpjl::Error::DimMismatch {
            expected: t.input_dim(),
            got: x.len(),
        }
        .into());
    }
    let pp = PrivacyParams::new(a.epsilon, a.delta)?;
    let mut rng = Rng::derive(seed, "sketch-noise", content_id(x), 0);
    let mut log = Vec::new();
    let sketch = match a.site {
        SiteArg::Output => {
            let sens = t.sensitivities();
            let forced = match a.mechanism {
                MechanismArg::Auto => None,
                MechanismArg::Laplace => Some(Mechanism::Laplace),
                MechanismArg::Gaussian => Some(Mechanism::Gaussian),
            };
            let cal = calibrate(&sens, &pp, forced)?;
            let noise = if a.debug_zero_noise {
                NoiseSpec::from_parts(cal.noise.mechanism(), 0.0)
            } else {
                cal.noise
            };
            log.push(format!(
                "mechanism={} ({}) scale={} delta1={} delta2={} pure_dp={}",
                noise.mechanism(),
                if forced.is_some() { "forced" } else { "auto" },
                noise.scale(),
                sens.delta1,
                sens.delta2,
                noise.mechanism() == Mechanism::Laplace
            ));
            if cal.epsilon_regime_warning {
                log.push("warning: epsilon >= 1 is outside the usual range of the Gaussian calibration".into());
            }
            privatize(t, x, &noise, &pp, &mut rng)?
        }
        SiteArg::Input => {
            if a.mechanism == MechanismArg::Laplace {
                return Err(CliError::Usage("input perturbation uses Gaussian noise".into()));
            }
            if t.kind() != TransformKind::Fjlt {
                return Err(dpjl::Error::SchemeMismatch(format!(
                    "input perturbation is defined for the FJLT only, got {}",
                    t.kind()
                ))
                .into());
            }
            if a.delta == 0.0 {
                return Err(dpjl::Error::GaussianNeedsDelta.into());
            }
            let floor = gaussian_sigma_floor(1.0, a.epsilon, a.delta);
            let sigma = a.sigma.unwrap_or(floor);
            log.push(format!("mechanism=gaussian (input) scale={sigma} floor={floor} pure_dp=false"));
            if a.epsilon >= 1.0 {
                log.push("warning: epsilon >= 1 is outside the usual range of the Gaussian calibration".into());
            }
            if a.debug_zero_noise {
                let mut sk = privatize(t, x, &NoiseSpec::Gaussian { sigma: 0.0 }, &pp, &mut rng)?;
                sk.site = PerturbationSite::Input;
                sk
            } else {
                privatize_input_fjlt(t, x, sigma, &pp, &mut rng)?
            }
        }
    };
    if a.debug_zero_noise {
        log.push("warning: --debug-zero-noise set; this sketch is not private".into());
    }
    Ok((sketch, log))
}

pub fn sketch(a: &SketchArgs) -> CliResult<()> {
    let t = load_transform(&a.transform)?;
    let x = read_vector(&a.input)?;
    let seed = resolve_seed(a.seed)?;
    let (sk, log) = make_sketch(&t, &x, a, seed)?;
    write_output(a.out.as_deref(), sk.to_text().as_bytes())?;
    for line in log {
        eprintln!("{line}");
    }
    Ok(())
}

pub fn estimate(a: &EstimateArgs) -> CliResult<()> {
    let sa = load_sketch(&a.a)?;
    let sb = load_sketch(&a.b)?;
    let mut report = estimate_sqdist(&sa, &sb)?;
    plug_in_variance(&mut report, &sa.noise, sa.input_dim)?;
    if a.header {
        println!("{ESTIMATE_CSV_HEADER}");
    }
    println!("{}", report.to_csv_row());
    Ok(())
}

fn parse_noise(s: &str) -> CliResult<NoiseSpec> {
    let bad = || CliError::Usage(format!("--noise must be laplace:B or gaussian:SIGMA, got {s:?}"));
    let (kind, scale) = s.split_once(':').ok_or_else(bad)?;
    let scale: f64 = scale.parse().map_err(|_| bad())?;
    if !(scale >= 0.0 && scale.is_finite()) {
        return Err(bad());
    }
    let mechanism: Mechanism = kind.parse().map_err(|_| bad())?;
    Ok(NoiseSpec::from_parts(mechanism, scale))
}

pub fn oracle_check(a: &OracleCheckArgs) -> CliResult<()> {
    let x: Vec<f64> = match &a.x {
        Some(list) => parse_list(list, "entry")?,
        None => vec![1.0; a.d],
    };
    let statistic = match &a.noise {
        Some(n) => Statistic::EstWithNoise(parse_noise(n)?),
        None => Statistic::NormSq,
    };
    let r = enumerate_sjlt_moments(a.d, a.k, a.s, &x, statistic)?;
    let n2: f64 = x.iter().map(|v| v * v).sum();
    let n4: f64 = x.iter().map(|v| v.powi(4)).sum();
    let expected_var = match statistic {
        Statistic::NormSq => 2.0 / a.k as f64 * (n2 * n2 - n4),
        Statistic::EstWithNoise(noise) => {
            dpjl::estimators::analytic_variance(dpjl::estimators::Scheme::SjltOut, &noise, a.k, a.d, n2, Some(n4))?
                .value
        }
    };
    let ok = |got: f64, want: f64| (got - want).abs() <= 1e-12 * want.abs().max(1.0);
    let matched = ok(r.mean, n2) && ok(r.variance, expected_var);
    println!("configs={}", r.count);
    println!("mean={} expected_mean={}", r.mean, n2);
    println!("variance={} expected_variance={}", r.variance, expected_var);
    println!("match={}", if matched { "yes" } else { "no" });
    if matched {
        Ok(())
    } else {
        Err(CliError::Usage("enumerated moments disagree with the closed forms".into()))
    }
}
