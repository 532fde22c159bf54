//! `bench-variance` and `bench-time`.
//!
//! Both write CSV preceded by the comment line `# dpjl-bench v1`.

use std::fmt;
use std::hint::black_box;
use std::time::Instant;

use dpjl::estimators::{Scheme, VarianceKind};
use dpjl::hadamard::fwht_in_place;
use dpjl::oracle::{mc_samples, summarize};
use dpjl::privacy::{Mechanism, NoiseSpec, PrivacyParams};
use dpjl::rng::Rng;
use dpjl::simulate::{ramp_pair, NoisePolicy, SchemeConfig};
use dpjl::transforms::{FjltTransform, HashMode, IidGaussianTransform, SjltTransform};

use crate::error::{CliError, CliResult};
use crate::io::{parse_list, write_output};
use crate::{resolve_seed, BenchTimeArgs, BenchVarianceArgs};

pub const CSV_VERSION_LINE: &str = "# dpjl-bench v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SchemeChoice {
    pub scheme: Scheme,
    /// `None` selects the mechanism from the reference sensitivities.
    pub mechanism: Option<Mechanism>,
}

impl SchemeChoice {
    pub fn label(&self) -> String {
        let m = self.mechanism.map(|m| m.to_string()).unwrap_or_else(|| "auto".into());
        format!("{}:{m}", self.scheme)
    }
}

impl std::str::FromStr for SchemeChoice {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let bad = || CliError::Usage(format!("bad scheme {s:?}; expected TRANSFORM:MECHANISM"));
        let (t, m) = s.split_once(':').ok_or_else(bad)?;
        let scheme = match t {
            "sjlt" => Scheme::SjltOut,
            "iid" => Scheme::IidOut,
            "fjlt" | "fjlt-out" => Scheme::FjltOut,
            "fjlt-in" => Scheme::FjltIn,
            _ => return Err(bad()),
        };
        let mechanism = match m {
            "auto" => None,
            other => Some(other.parse::<Mechanism>().map_err(|_| bad())?),
        };
        if scheme == Scheme::FjltIn && mechanism == Some(Mechanism::Laplace) {
            return Err(CliError::Usage("fjlt-in uses Gaussian noise".into()));
        }
        Ok(Self { scheme, mechanism })
    }
}

impl fmt::Display for SchemeChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Clone, Debug)]
pub struct VarianceBench {
    pub schemes: Vec<SchemeChoice>,
    pub dist_sq: f64,
    pub deltas: Vec<f64>,
    pub epsilon: f64,
    pub trials: usize,
    pub seed: u64,
    pub d: usize,
    pub k: usize,
    pub s: usize,
    pub beta: f64,
    pub c_q: f64,
    pub timing: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub scheme: String,
    pub d: usize,
    pub k: usize,
    pub s: Option<usize>,
    pub epsilon: f64,
    pub delta: f64,
    pub mechanism: Mechanism,
    pub noise_scale: f64,
    pub dist_sq_true: f64,
    pub est_mean: Option<f64>,
    pub est_var_empirical: Option<f64>,
    pub est_var_analytic: f64,
    pub variance_kind: VarianceKind,
    /// Analytic variance minus its zero-noise value.
    pub noise_var_analytic: f64,
    pub n_trials: usize,
    pub wall_time_ns: Option<u128>,
}

pub const VARIANCE_CSV_HEADER: [&str; 16] = [
    "scheme",
    "d",
    "k",
    "s",
    "epsilon",
    "delta",
    "mechanism",
    "noise_scale",
    "dist_sq_true",
    "est_mean",
    "est_var_empirical",
    "est_var_analytic",
    "variance_kind",
    "noise_var_analytic",
    "n_trials",
    "wall_time_ns",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl BenchRow {
    fn record(&self) -> Vec<String> {
        vec![
            self.scheme.clone(),
            self.d.to_string(),
            self.k.to_string(),
            opt(self.s),
            self.epsilon.to_string(),
            self.delta.to_string(),
            self.mechanism.to_string(),
            self.noise_scale.to_string(),
            self.dist_sq_true.to_string(),
            opt(self.est_mean),
            opt(self.est_var_empirical),
            self.est_var_analytic.to_string(),
            self.variance_kind.to_string(),
            self.noise_var_analytic.to_string(),
            self.n_trials.to_string(),
            opt(self.wall_time_ns),
        ]
    }
}

/// Per-delta comparison across the benchmarked schemes.
#[derive(Clone, Debug, PartialEq)]
pub struct Crossover {
    pub delta: f64,
    /// Scheme with the smallest analytic noise term.
    pub analytic_winner: String,
    /// Scheme with the smallest empirical variance, when trials ran.
    pub empirical_winner: Option<String>,
}

impl Crossover {
    pub fn agrees(&self) -> Option<bool> {
        self.empirical_winner.as_ref().map(|w| *w == self.analytic_winner)
    }

    pub fn line(&self) -> String {
        let agree = match self.agrees() {
            Some(true) => "yes",
            Some(false) => "no",
            None => "n/a",
        };
        format!(
            "# crossover delta={} analytic_winner={} empirical_winner={} agree={agree}",
            self.delta,
            self.analytic_winner,
            self.empirical_winner.as_deref().unwrap_or("n/a"),
        )
    }
}

impl VarianceBench {
    pub fn from_args(a: &BenchVarianceArgs) -> CliResult<Self> {
        let schemes: Vec<SchemeChoice> = parse_list(&a.schemes, "scheme")?;
        let deltas: Vec<f64> = parse_list(&a.delta_grid, "delta")?;
        if schemes.is_empty() || deltas.is_empty() {
            return Err(CliError::Usage("--schemes and --delta-grid must be non-empty".into()));
        }
        if !(a.dist_sq >= 0.0 && a.dist_sq.is_finite()) {
            return Err(CliError::Usage("--dist-sq must be a non-negative number".into()));
        }
        if a.trials == 1 {
            return Err(CliError::Usage("--trials must be 0 or at least 2".into()));
        }
        Ok(Self {
            schemes,
            dist_sq: a.dist_sq,
            deltas,
            epsilon: a.epsilon,
            trials: a.trials,
            seed: resolve_seed(a.seed)?,
            d: a.dim,
            k: a.k,
            s: a.s,
            beta: a.beta,
            c_q: a.c_q,
            timing: !a.no_timing,
        })
    }

    fn config(&self, choice: &SchemeChoice, pp: PrivacyParams) -> SchemeConfig {
        let policy = NoisePolicy::PerTransform {
            privacy: pp,
            mechanism: choice.mechanism,
        };
        match choice.scheme {
            Scheme::SjltOut => SchemeConfig::sjlt(self.d, self.k, self.s, policy),
            Scheme::IidOut => SchemeConfig::iid(self.d, self.k, policy),
            scheme => SchemeConfig::fjlt(scheme, self.d, self.k, self.beta, self.c_q, policy),
        }
    }

    /// Runs every scheme at every delta. Noise is calibrated once per
    /// (scheme, delta) against a reference transform drawn from the seed and
    /// then held fixed, so the analytic variance applies to every trial.
    pub fn run(&self) -> CliResult<(Vec<BenchRow>, Vec<Crossover>)> {
        let (x, y) = ramp_pair(self.d, self.dist_sq);
        let reference_seed = Rng::derive(self.seed, "bench-reference", 0, 0).next_u64();
        let mut rows = Vec::new();
        let mut crossovers = Vec::new();
        for &delta in &self.deltas {
            let pp = PrivacyParams::new(self.epsilon, delta)?;
            let first_row = rows.len();
            for choice in &self.schemes {
                let label = choice.label();
                let base = self.config(choice, pp);
                let noise = base.reference_noise(reference_seed)?;
                let cfg = SchemeConfig {
                    noise: NoisePolicy::Fixed(noise),
                    ..base
                };
                let analytic = cfg.analytic(&noise, &x, &y)?;
                let silent = NoiseSpec::from_parts(noise.mechanism(), 0.0);
                let noiseless = cfg.analytic(&silent, &x, &y)?;

                let (mut est_mean, mut est_var, mut wall) = (None, None, None);
                if self.trials > 0 {
                    let start = Instant::now();
                    let samples = mc_samples(
                        |rng| cfg.trial(&x, &y, rng).expect("configuration validated by the reference draw"),
                        self.trials,
                        self.seed,
                        &format!("bench/{label}/{delta}"),
                    );
                    let elapsed = start.elapsed().as_nanos();
                    let r = summarize(&samples);
                    est_mean = Some(r.mean);
                    est_var = Some(r.variance);
                    wall = self.timing.then_some(elapsed);
                }
                rows.push(BenchRow {
                    scheme: label,
                    d: self.d,
                    k: self.k,
                    s: (choice.scheme == Scheme::SjltOut).then_some(self.s),
                    epsilon: self.epsilon,
                    delta,
                    mechanism: noise.mechanism(),
                    noise_scale: noise.scale(),
                    dist_sq_true: self.dist_sq,
                    est_mean,
                    est_var_empirical: est_var,
                    est_var_analytic: analytic.value,
                    variance_kind: analytic.kind,
                    noise_var_analytic: analytic.value - noiseless.value,
                    n_trials: self.trials,
                    wall_time_ns: wall,
                });
            }
            let block = &rows[first_row..];
            let analytic_winner = block
                .iter()
                .min_by(|a, b| a.noise_var_analytic.total_cmp(&b.noise_var_analytic))
                .map(|r| r.scheme.clone())
                .unwrap_or_default();
            let empirical_winner = if self.trials > 0 {
                block
                    .iter()
                    .min_by(|a, b| a.est_var_empirical.unwrap().total_cmp(&b.est_var_empirical.unwrap()))
                    .map(|r| r.scheme.clone())
            } else {
                None
            };
            crossovers.push(Crossover {
                delta,
                analytic_winner,
                empirical_winner,
            });
        }
        Ok((rows, crossovers))
    }
}

pub fn variance_csv(rows: &[BenchRow]) -> CliResult<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(VARIANCE_CSV_HEADER)?;
    for row in rows {
        wtr.write_record(row.record())?;
    }
    let body = wtr.into_inner().map_err(|e| CliError::io("<csv>", e.into_error()))?;
    let mut out = format!("{CSV_VERSION_LINE}\n");
    out.push_str(&String::from_utf8(body).expect("CSV of ASCII fields"));
    Ok(out)
}

pub fn cmd_bench_variance(a: &BenchVarianceArgs) -> CliResult<()> {
    let bench = VarianceBench::from_args(a)?;
    if bench.trials > 0 && bench.trials < 10_000 {
        eprintln!("note: fewer than 10000 trials; empirical columns are rough");
    }
    let (rows, crossovers) = bench.run()?;
    write_output(a.out.as_deref(), variance_csv(&rows)?.as_bytes())?;
    for c in &crossovers {
        eprintln!("{}", c.line());
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct TimeBench {
    pub d: usize,
    pub k: usize,
    pub sparsities: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub alpha: f64,
    pub beta: f64,
    pub nnz: usize,
    pub timing: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeRow {
    pub op: &'static str,
    pub d: usize,
    pub k: Option<usize>,
    pub s: Option<usize>,
    pub input: &'static str,
    pub nnz: usize,
    pub reps: usize,
    pub median_ns: Option<u128>,
    pub min_ns: Option<u128>,
}

pub const TIME_CSV_HEADER: [&str; 9] = ["op", "d", "k", "s", "input", "nnz", "reps", "median_ns", "min_ns"];

fn time_reps<F: FnMut()>(reps: usize, mut f: F) -> (u128, u128) {
    let mut times: Vec<u128> = (0..reps.max(1))
        .map(|_| {
            let start = Instant::now();
            f();
            start.elapsed().as_nanos()
        })
        .collect();
    times.sort_unstable();
    (times[times.len() / 2], times[0])
}

/// Interval `(ln^2(1/beta)/alpha, (1/beta)^(1/alpha))` with unit constants.
pub fn heuristic_interval(alpha: f64, beta: f64) -> (f64, f64) {
    let l = (1.0 / beta).ln();
    (l * l / alpha, (1.0 / beta).powf(1.0 / alpha))
}

impl TimeBench {
    pub fn from_args(a: &BenchTimeArgs) -> CliResult<Self> {
        let sparsities: Vec<usize> = parse_list(&a.sparsity_grid, "sparsity")?;
        if let Some(bad) = sparsities.iter().find(|&&s| s == 0 || !a.k.is_multiple_of(s)) {
            return Err(CliError::Usage(format!("sparsity {bad} does not divide k = {}", a.k)));
        }
        if a.nnz == 0 || a.nnz > a.dim {
            return Err(CliError::Usage("--nnz must lie in [1, dim]".into()));
        }
        Ok(Self {
            d: a.dim,
            k: a.k,
            sparsities,
            reps: a.trials.max(1),
            seed: resolve_seed(a.seed)?,
            alpha: a.alpha,
            beta: a.beta,
            nnz: a.nnz,
            timing: !a.no_timing,
        })
    }

    pub fn run(&self) -> CliResult<Vec<TimeRow>> {
        let mut rng = Rng::derive(self.seed, "bench-time", 0, 0);
        let dense: Vec<f64> = (0..self.d).map(|_| rng.uniform() * 2.0 - 1.0).collect();
        let mut sparse = vec![0.0; self.d];
        for j in 0..self.nnz {
            sparse[j * (self.d / self.nnz)] = 1.0;
        }
        let inputs = [("dense", &dense, self.d), ("sparse", &sparse, self.nnz)];
        let mut rows = Vec::new();
        let mut push = |op, k, s, input, nnz, times: Option<(u128, u128)>, timing: bool| {
            let times = times.filter(|_| timing);
            rows.push(TimeRow {
                op,
                d: self.d,
                k,
                s,
                input,
                nnz,
                reps: self.reps,
                median_ns: times.map(|t| t.0),
                min_ns: times.map(|t| t.1),
            });
        };

        for &s in &self.sparsities {
            let t = SjltTransform::with_dims(self.d, self.k, s, rng.next_u64(), HashMode::Prf)?;
            for (name, x, nnz) in inputs {
                let times = time_reps(self.reps, || {
                    black_box(t.apply(black_box(x)).unwrap());
                });
                push("sjlt_apply", Some(self.k), Some(s), name, nnz, Some(times), self.timing);
            }
        }
        let f = FjltTransform::new(self.alpha, self.beta, self.d, self.k, 1.0, rng.next_u64())?;
        for (name, x, nnz) in inputs {
            let times = time_reps(self.reps, || {
                black_box(f.apply(black_box(x)).unwrap());
            });
            push("fjlt_apply", Some(self.k), None, name, nnz, Some(times), self.timing);
        }
        let g = IidGaussianTransform::new(self.d, self.k, rng.next_u64())?;
        for (name, x, nnz) in inputs {
            let times = time_reps(self.reps, || {
                black_box(g.apply(black_box(x)).unwrap());
            });
            push("iid_apply", Some(self.k), None, name, nnz, Some(times), self.timing);
        }
        let top = self.d.next_power_of_two();
        for size in [top / 4, top / 2, top, top * 2].into_iter().filter(|&n| n >= 1) {
            let mut v: Vec<f64> = (0..size).map(|_| rng.uniform()).collect();
            let times = time_reps(self.reps, || {
                fwht_in_place(black_box(&mut v)).unwrap();
            });
            rows.push(TimeRow {
                op: "fwht",
                d: size,
                k: None,
                s: None,
                input: "dense",
                nnz: size,
                reps: self.reps,
                median_ns: self.timing.then_some(times.0),
                min_ns: self.timing.then_some(times.1),
            });
        }
        Ok(rows)
    }

    pub fn heuristic_lines(&self) -> Vec<String> {
        let (lo, hi) = heuristic_interval(self.alpha, self.beta);
        let inside = (self.d as f64) > lo && (self.d as f64) < hi;
        vec![format!(
            "# heuristic (unit constants) sparse-beats-fast interval: {lo} < d < {hi}; d={} inside={}",
            self.d,
            if inside { "yes" } else { "no" }
        )]
    }
}

pub fn time_csv(rows: &[TimeRow], comments: &[String]) -> CliResult<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(TIME_CSV_HEADER)?;
    for r in rows {
        wtr.write_record([
            r.op.to_string(),
            r.d.to_string(),
            opt(r.k),
            opt(r.s),
            r.input.to_string(),
            r.nnz.to_string(),
            r.reps.to_string(),
            opt(r.median_ns),
            opt(r.min_ns),
        ])?;
    }
    let body = wtr.into_inner().map_err(|e| CliError::io("<csv>", e.into_error()))?;
    let mut out = format!("{CSV_VERSION_LINE}\n");
    for c in comments {
        out.push_str(c);
        out.push('\n');
    }
    out.push_str(&String::from_utf8(body).expect("CSV of ASCII fields"));
    Ok(out)
}

pub fn cmd_bench_time(a: &BenchTimeArgs) -> CliResult<()> {
    let bench = TimeBench::from_args(a)?;
    let rows = bench.run()?;
    write_output(a.out.as_deref(), time_csv(&rows, &bench.heuristic_lines())?.as_bytes())
}
