//! Event-driven Monte Carlo of the coupled CTRW log-price: one-sided
//! stable waiting times, and a Poisson number of operator-stable jumps per
//! waiting time whose scale depends on that waiting time.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};
use crate::jump_intensity::JumpIntensitySpec;
use crate::operator_algebra::StableIndex;

/// Waiting times with Laplace transform `exp(-K Gamma(1-beta) s^beta)`.
///
/// At `beta = 1` the law is a point mass at `k_norm`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaitingTimeLaw {
    pub beta: f64,
    pub k_norm: f64,
    /// Tail cutoff; carried for bookkeeping, it does not enter the sampler.
    #[serde(default = "default_cutoff")]
    pub a: f64,
}

fn default_cutoff() -> f64 {
    1.0
}

impl WaitingTimeLaw {
    pub fn new(beta: f64, k_norm: f64) -> Result<Self> {
        let w = WaitingTimeLaw {
            beta,
            k_norm,
            a: default_cutoff(),
        };
        w.validate()?;
        Ok(w)
    }

    /// Law with Laplace transform `exp(-scale s^beta)`.
    pub fn with_laplace_scale(beta: f64, scale: f64) -> Result<Self> {
        if beta >= 1.0 {
            return Self::new(beta, scale);
        }
        Self::new(beta, scale / gamma(1.0 - beta))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::invalid("beta", format!("must lie in (0, 1], got {}", self.beta)));
        }
        if !(self.k_norm > 0.0 && self.k_norm.is_finite()) {
            return Err(Error::invalid("k_norm", "must be positive"));
        }
        if !(self.a > 0.0) {
            return Err(Error::invalid("a", "must be positive"));
        }
        Ok(())
    }

    /// `K Gamma(1 - beta)`, the coefficient of `s^beta` in the Laplace exponent.
    pub fn laplace_scale(&self) -> f64 {
        if self.beta >= 1.0 {
            self.k_norm
        } else {
            self.k_norm * gamma(1.0 - self.beta)
        }
    }

    pub fn laplace_transform(&self, s: f64) -> f64 {
        (-self.laplace_scale() * s.powf(self.beta)).exp()
    }
}

/// Positive stable variable with Laplace transform `exp(-s^lambda)`,
/// `0 < lambda <= 1`, by Kanter's representation.
pub fn positive_stable<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> f64 {
    if lambda >= 1.0 {
        return 1.0;
    }
    let u: f64 = PI * rng.random::<f64>();
    let u = if u == 0.0 { f64::MIN_POSITIVE } else { u };
    let w: f64 = Exp1.sample(rng);
    let a = (lambda * u).sin() / u.sin().powf(1.0 / lambda);
    let b = (((1.0 - lambda) * u).sin() / w).powf((1.0 - lambda) / lambda);
    a * b
}

pub fn sample_waiting_time<R: Rng + ?Sized>(law: &WaitingTimeLaw, rng: &mut R) -> f64 {
    law.laplace_scale().powf(1.0 / law.beta) * positive_stable(law.beta, rng)
}

fn default_c() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Drift per unit `time^beta`.
    pub alpha: f64,
    pub beta: f64,
    pub sigma: Vec<f64>,
    /// Poisson rate of jumps per waiting time.
    #[serde(default = "default_c")]
    pub c: f64,
    pub waiting: WaitingTimeLaw,
    pub jumps: JumpIntensitySpec,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        self.waiting.validate()?;
        self.jumps.validate()?;
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::invalid("beta", format!("must lie in (0, 1), got {}", self.beta)));
        }
        if self.waiting.beta != self.beta {
            return Err(Error::invalid(
                "waiting.beta",
                format!("must equal beta = {}, got {}", self.beta, self.waiting.beta),
            ));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::invalid("c", format!("must be positive, got {}", self.c)));
        }
        if !self.alpha.is_finite() {
            return Err(Error::invalid("alpha", "must be finite"));
        }
        if self.sigma.len() != self.jumps.dim() {
            return Err(Error::invalid(
                "sigma",
                format!(
                    "length {} does not match jump dimension {}",
                    self.sigma.len(),
                    self.jumps.dim()
                ),
            ));
        }
        if self.sigma.iter().all(|s| *s == 0.0) || self.sigma.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("sigma", "volatility vector must be finite and nonzero"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.sigma.len()
    }
}

/// One jump `Y` with characteristic function `exp(C |k|^{d mu})`, as
/// `sqrt(A) G` with `A` positive `(d mu / 2)`-stable and
/// `G ~ N(0, 2 |C|^{2/(d mu)} I)`.
pub fn sample_jump<R: Rng + ?Sized>(spec: &JumpIntensitySpec, rng: &mut R) -> Result<Vec<f64>> {
    match spec.index {
        StableIndex::PureScaling { d, .. } => {
            let alpha = spec.radial_exponent();
            let a = positive_stable(alpha / 2.0, rng);
            let sd = (2.0 * a).sqrt() * (-spec.amplitude).powf(1.0 / alpha);
            Ok((0..d)
                .map(|_| {
                    let g: f64 = StandardNormal.sample(rng);
                    sd * g
                })
                .collect())
        }
        StableIndex::ScalingRotation { .. } => Err(Error::Unsupported(
            "no sampler is established for the scaling-rotation intensity".into(),
        )),
    }
}

/// Compound-Poisson fluctuation over a waiting time `delta_t`: a
/// `Poisson(c)` number of jumps, each scaled by `delta_t^{beta E}`.
pub fn sample_fluctuation<R: Rng + ?Sized>(
    params: &ModelParams,
    delta_t: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(delta_t > 0.0) {
        return Err(Error::Domain(format!("delta_t must be positive, got {delta_t}")));
    }
    if let StableIndex::ScalingRotation { .. } = params.jumps.index {
        return Err(Error::Unsupported(
            "no sampler is established for the scaling-rotation intensity".into(),
        ));
    }
    let d = params.dim();
    let count = Poisson::new(params.c)
        .map_err(|e| Error::invalid("c", e.to_string()))?
        .sample(rng) as usize;
    let mut sum = vec![0.0; d];
    for _ in 0..count {
        for (s, y) in sum.iter_mut().zip(sample_jump(&params.jumps, rng)?) {
            *s += y;
        }
    }
    let scale = delta_t.powf(params.beta * params.jumps.index.scale_exponent());
    Ok(sum.into_iter().map(|x| x * scale).collect())
}

/// A simulated trajectory. `log_prices[j]` is the log-price right after
/// event `j`; before the first event it is `x0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub seed: u64,
    pub path_id: u64,
    pub horizon: f64,
    pub x0: f64,
    pub event_times: Vec<f64>,
    pub fluctuations: Vec<Vec<f64>>,
    pub log_prices: Vec<f64>,
}

impl PathSample {
    /// `X_t`, read from the last event at or before `t`.
    pub fn value_at(&self, t: f64) -> f64 {
        let idx = self.event_times.partition_point(|&s| s <= t);
        if idx == 0 {
            self.x0
        } else {
            self.log_prices[idx - 1]
        }
    }

    /// Number of events in `[0, t]`.
    pub fn count_until(&self, t: f64) -> usize {
        self.event_times.partition_point(|&s| s <= t)
    }

    /// Log-price increment of event `j` recomputed from the stored waiting
    /// time and fluctuation.
    pub fn increment(&self, params: &ModelParams, j: usize) -> f64 {
        let prev = if j == 0 { 0.0 } else { self.event_times[j - 1] };
        let wait = self.event_times[j] - prev;
        let proj: f64 = params
            .sigma
            .iter()
            .zip(&self.fluctuations[j])
            .map(|(s, f)| s * f)
            .sum();
        params.alpha * wait.powf(params.beta) + proj
    }
}

/// Independent stream `path_id` of the generator seeded by `seed`.
pub fn path_rng(seed: u64, path_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_id);
    rng
}

pub fn simulate_path<R: Rng + ?Sized>(
    params: &ModelParams,
    horizon: f64,
    rng: &mut R,
) -> Result<PathSample> {
    params.validate()?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
    }
    let mut path = PathSample {
        seed: 0,
        path_id: 0,
        horizon,
        x0: 0.0,
        event_times: Vec::new(),
        fluctuations: Vec::new(),
        log_prices: Vec::new(),
    };
    let mut t = 0.0;
    let mut x = 0.0;
    loop {
        let wait = sample_waiting_time(&params.waiting, rng);
        if t + wait > horizon {
            break;
        }
        let fl = sample_fluctuation(params, wait, rng)?;
        t += wait;
        path.event_times.push(t);
        path.fluctuations.push(fl);
        let j = path.event_times.len() - 1;
        x += path.increment(params, j);
        path.log_prices.push(x);
    }
    Ok(path)
}

/// `n_paths` trajectories on disjoint streams of `seed`, in parallel.
pub fn simulate_paths(
    params: &ModelParams,
    horizon: f64,
    seed: u64,
    n_paths: usize,
) -> Result<Vec<PathSample>> {
    (0..n_paths as u64)
        .into_par_iter()
        .map(|id| {
            let mut rng = path_rng(seed, id);
            let mut p = simulate_path(params, horizon, &mut rng)?;
            p.seed = seed;
            p.path_id = id;
            Ok(p)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalChar {
    pub value: Complex64,
    /// Jackknife standard error of the modulus of the mean.
    pub std_error: f64,
}

/// Mean of `exp(i k x)` with its jackknife standard error.
pub fn empirical_char_samples(xs: &[f64], k: f64) -> EmpiricalChar {
    let n = xs.len() as f64;
    let terms: Vec<Complex64> = xs.iter().map(|x| Complex64::from_polar(1.0, k * x)).collect();
    let sum: Complex64 = terms.iter().sum();
    let mean = sum / n;
    // leave-one-out means are (sum - z_i)/(n - 1)
    let ss: f64 = terms
        .iter()
        .map(|z| ((sum - z) / (n - 1.0) - mean).norm_sqr())
        .sum();
    EmpiricalChar {
        value: mean,
        std_error: ((n - 1.0) / n * ss).sqrt(),
    }
}

pub fn empirical_char(paths: &[PathSample], t: f64, k: f64) -> Result<EmpiricalChar> {
    if paths.len() < 1000 {
        return Err(Error::Contract(format!(
            "empirical_char needs at least 1000 paths, got {}",
            paths.len()
        )));
    }
    if let Some(p) = paths.iter().find(|p| t > p.horizon) {
        return Err(Error::Contract(format!(
            "t = {t} lies beyond the horizon {} of path {}",
            p.horizon, p.path_id
        )));
    }
    let xs: Vec<f64> = paths.iter().map(|p| p.value_at(t)).collect();
    Ok(empirical_char_samples(&xs, k))
}

/// Least-squares slope of `ln P(T > t)` against `ln t` over the given
/// survival levels.
pub fn tail_slope(samples: &[f64], levels: &[f64]) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let pts: Vec<(f64, f64)> = levels
        .iter()
        .map(|&p| {
            let idx = ((1.0 - p) * n).floor() as usize;
            (sorted[idx.min(sorted.len() - 1)].ln(), p.ln())
        })
        .collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

pub const PATH_SCHEMA_VERSION: u32 = 1;

/// CSV with columns `path_id, event_time, x1..xd, log_price`.
pub fn write_paths_csv<W: Write>(paths: &[PathSample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let d = paths
        .iter()
        .find_map(|p| p.fluctuations.first().map(Vec::len))
        .unwrap_or(1);
    let mut header = vec!["path_id".to_string(), "event_time".to_string()];
    header.extend((1..=d).map(|i| format!("x{i}")));
    header.push("log_price".into());
    w.write_record(&header)?;
    for p in paths {
        for j in 0..p.event_times.len() {
            let mut row = vec![p.path_id.to_string(), format!("{:e}", p.event_times[j])];
            row.extend(p.fluctuations[j].iter().map(|x| format!("{x:e}")));
            row.push(format!("{:e}", p.log_prices[j]));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct PathManifest<'a> {
    pub schema_version: u32,
    pub params: &'a ModelParams,
    pub seed: u64,
    pub horizon: f64,
    pub n_paths: usize,
    pub total_events: usize,
    pub max_events: usize,
}

pub fn path_manifest<'a>(
    params: &'a ModelParams,
    paths: &[PathSample],
    seed: u64,
    horizon: f64,
) -> PathManifest<'a> {
    PathManifest {
        schema_version: PATH_SCHEMA_VERSION,
        params,
        seed,
        horizon,
        n_paths: paths.len(),
        total_events: paths.iter().map(|p| p.event_times.len()).sum(),
        max_events: paths.iter().map(|p| p.event_times.len()).max().unwrap_or(0),
    }
}
