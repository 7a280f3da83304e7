//! Joint characteristic function of log-prices on a time lattice and the
//! running maximum, built from the one-step marginal `nu(k|dt)`, plus 2-D
//! Fourier inversion to a density on an `(x, y)` grid.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::{Error, Result};
use crate::jump_intensity::JumpIntensitySpec;
use crate::marginal_kernel::{n_marginal_closed_log, MarginalQuery};

/// One-step law of `sigma . dL` over a lattice step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepLaw {
    pub spec: JumpIntensitySpec,
    pub sigma: Vec<f64>,
    pub beta: f64,
}

/// Lattice `t_0 + i dt`, `i = 0..N`, carrying the observation times.
#[derive(Debug, Clone, PartialEq)]
pub struct PathLattice {
    pub t0: f64,
    pub times: Vec<f64>,
    pub n_steps: usize,
    pub step: StepLaw,
    indices: Vec<usize>,
}

impl PathLattice {
    pub fn new(t0: f64, times: Vec<f64>, n_steps: usize, step: StepLaw) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::Contract("at least one observation time is required".into()));
        }
        if n_steps == 0 {
            return Err(Error::Contract("n_steps must be positive".into()));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) || times[0] <= t0 {
            return Err(Error::Contract("times must increase strictly from t0".into()));
        }
        let dt = (times[times.len() - 1] - t0) / n_steps as f64;
        let mut indices = Vec::with_capacity(times.len());
        for &t in &times {
            let r = (t - t0) / dt;
            let i = r.round();
            if (r - i).abs() > 1e-9 * r.max(1.0) || i < 1.0 {
                return Err(Error::Contract(format!(
                    "time {t} is not on the lattice t0 + i * {dt}"
                )));
            }
            indices.push(i as usize);
        }
        let lattice = PathLattice {
            t0,
            times,
            n_steps,
            step,
            indices,
        };
        lattice.marginal_query(0.0).validate()?;
        Ok(lattice)
    }

    pub fn delta_t(&self) -> f64 {
        (self.times[self.times.len() - 1] - self.t0) / self.n_steps as f64
    }

    /// `i_j` with `t_j - t_0 = i_j dt`.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    fn marginal_query(&self, k: f64) -> MarginalQuery {
        MarginalQuery {
            spec: self.step.spec,
            n: 1,
            k,
            delta_t: self.delta_t(),
            sigma: self.step.sigma.clone(),
            beta: self.step.beta,
        }
    }

    /// `ln nu(k|dt)` from the exact `n = 1` closed form.
    pub fn log_nu(&self, k: f64) -> Result<f64> {
        n_marginal_closed_log(&self.marginal_query(k))
    }
}

/// `(1/(lN)) sum_j sum_{i=1}^N T_ij`, with
/// `T_ij = nu(k_j+w)^i nu(k_j)^{i_j-i}` for `i <= i_j` and
/// `T_ij = nu(k_j+w)^{i_j} nu(w)^{i-i_j}` otherwise. Summed termwise.
pub fn joint_char(lat: &PathLattice, k: &[f64], w: f64) -> Result<Complex64> {
    let l = lat.times.len();
    if k.len() != l {
        return Err(Error::Contract(format!(
            "{} frequencies for {} observation times",
            k.len(),
            l
        )));
    }
    let n = lat.n_steps;
    let lw = lat.log_nu(w)?;
    let mut total = 0.0;
    for (j, &kj) in k.iter().enumerate() {
        let ij = lat.indices[j];
        let lkw = lat.log_nu(kj + w)?;
        let lk = lat.log_nu(kj)?;
        for i in 1..=n {
            let e = if i <= ij {
                i as f64 * lkw + (ij - i) as f64 * lk
            } else {
                ij as f64 * lkw + (i - ij) as f64 * lw
            };
            total += e.exp();
        }
    }
    Ok(Complex64::new(total / (l * n) as f64, 0.0))
}

/// `ln sum_{i=1}^N e^{i r}`.
fn log_geometric(r: f64, n: usize) -> f64 {
    let nf = n as f64;
    if r.abs() < 1e-8 {
        let s: f64 = (1..=n).map(|i| (i as f64 * r).exp()).sum();
        s.ln()
    } else if r > 0.0 {
        nf * r + (-(-nf * r).exp_m1()).ln() - (-(-r).exp_m1()).ln()
    } else {
        r + (-(nf * r).exp_m1()).ln() - (-r.exp_m1()).ln()
    }
}

/// Single-time joint characteristic function of `(X_T, M_T)` in closed form,
/// `(1/N) nu(k)^N sum_{i=1}^N (nu(k+w)/nu(k))^i`.
pub fn max_char(lat: &PathLattice, k: f64, w: f64) -> Result<Complex64> {
    if lat.times.len() != 1 {
        return Err(Error::Contract("max_char needs a single observation time".into()));
    }
    let n = lat.n_steps;
    let lk = lat.log_nu(k)?;
    let lkw = lat.log_nu(k + w)?;
    let v = n as f64 * lk + log_geometric(lkw - lk, n) - (n as f64).ln();
    Ok(Complex64::new(v.exp(), 0.0))
}

/// Evaluates `joint_char` over many `(k, w)` points in parallel.
pub fn joint_char_batch(lat: &PathLattice, points: &[(Vec<f64>, f64)]) -> Result<Vec<Complex64>> {
    points.par_iter().map(|(k, w)| joint_char(lat, k, *w)).collect()
}

pub const JOINT_SCHEMA_VERSION: u32 = 1;

/// CSV with columns `k1..kl, w, re, im`.
pub fn write_batch_csv<W: Write>(
    points: &[(Vec<f64>, f64)],
    values: &[Complex64],
    out: W,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let l = points.first().map(|p| p.0.len()).unwrap_or(1);
    let mut header: Vec<String> = (1..=l).map(|i| format!("k{i}")).collect();
    header.extend(["w".into(), "re".into(), "im".into()]);
    wtr.write_record(&header)?;
    for ((k, w), v) in points.iter().zip(values) {
        let mut row: Vec<String> = k.iter().map(|x| format!("{x:e}")).collect();
        row.push(format!("{w:e}"));
        row.push(format!("{:e}", v.re));
        row.push(format!("{:e}", v.im));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Symmetric frequency lattice `(a - m/2) dk`, `a = 0..m`, `dk = 2 extent / m`.
/// `m` must be a multiple of 4.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub m: usize,
    pub extent: f64,
}

impl FrequencyGrid {
    /// Grid whose spatial step is `dx`.
    pub fn from_spacing(m: usize, dx: f64) -> Self {
        FrequencyGrid {
            m,
            extent: std::f64::consts::PI / dx,
        }
    }

    pub fn dk(&self) -> f64 {
        2.0 * self.extent / self.m as f64
    }

    pub fn dx(&self) -> f64 {
        2.0 * std::f64::consts::PI / (self.m as f64 * self.dk())
    }

    pub fn frequency(&self, a: usize) -> f64 {
        (a as f64 - (self.m / 2) as f64) * self.dk()
    }

    pub fn position(&self, b: usize) -> f64 {
        (b as f64 - (self.m / 2) as f64) * self.dx()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct JointDensity {
    pub grid: FrequencyGrid,
    /// Row-major, `density[bx * m + by]` at `(position(bx), position(by))`.
    pub density: Vec<f64>,
    /// Most negative value before clipping.
    pub min_before_clip: f64,
    /// Mass on `{x > y}`; zero for a law of `(X, max)`.
    pub off_support_mass: f64,
    /// Mass before clipping and renormalisation.
    pub raw_mass: f64,
}

impl JointDensity {
    pub fn at(&self, bx: usize, by: usize) -> f64 {
        self.density[bx * self.grid.m + by]
    }

    /// Marginal density in `x`.
    pub fn marginal_x(&self) -> Vec<f64> {
        let m = self.grid.m;
        let dx = self.grid.dx();
        (0..m)
            .map(|bx| self.density[bx * m..(bx + 1) * m].iter().sum::<f64>() * dx)
            .collect()
    }
}

/// Inverts `chi(k_a, w_b)` given on `grid x grid` (row-major in `k`).
pub fn invert_joint_density(grid: FrequencyGrid, values: &[Complex64]) -> Result<JointDensity> {
    let m = grid.m;
    if m % 4 != 0 || m == 0 {
        return Err(Error::Contract("frequency lattice size must be a multiple of 4".into()));
    }
    if values.len() != m * m {
        return Err(Error::Contract(format!("expected {} values, got {}", m * m, values.len())));
    }
    let boundary = (0..m)
        .flat_map(|a| [(0, a), (a, 0), (m - 1, a), (a, m - 1)])
        .map(|(a, b)| values[a * m + b].norm())
        .fold(0.0, f64::max);
    if boundary > 1e-12 {
        return Err(Error::GridTooCoarse {
            boundary_value: boundary,
            suggested_extent: 2.0 * grid.extent,
        });
    }
    let sign = |a: usize| if a % 2 == 0 { 1.0 } else { -1.0 };
    let mut buf: Vec<Complex64> = (0..m * m)
        .map(|idx| values[idx] * sign(idx / m + idx % m))
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(m);
    for row in buf.chunks_mut(m) {
        fft.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); m];
    for c in 0..m {
        for r in 0..m {
            col[r] = buf[r * m + c];
        }
        fft.process(&mut col);
        for r in 0..m {
            buf[r * m + c] = col[r];
        }
    }
    let scale = (grid.dk() / (2.0 * std::f64::consts::PI)).powi(2);
    let dx = grid.dx();
    let mut density: Vec<f64> = (0..m * m)
        .map(|idx| buf[idx].re * scale * sign(idx / m + idx % m))
        .collect();
    let raw_mass = density.iter().sum::<f64>() * dx * dx;
    let min_before_clip = density.iter().copied().fold(f64::INFINITY, f64::min);
    for v in density.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let mass = density.iter().sum::<f64>() * dx * dx;
    for v in density.iter_mut() {
        *v /= mass;
    }
    let mut off = 0.0;
    for bx in 0..m {
        for by in 0..bx {
            off += density[bx * m + by];
        }
    }
    Ok(JointDensity {
        grid,
        density,
        min_before_clip,
        off_support_mass: off * dx * dx,
        raw_mass,
    })
}

/// Density of `(X_T + h Z_1, M_T + h Z_2)` for a single observation time,
/// `Z` independent standard normals. `h = 0` inverts the bare law.
pub fn joint_density(lat: &PathLattice, grid: FrequencyGrid, smoothing: f64) -> Result<JointDensity> {
    let m = grid.m;
    let values: Result<Vec<Complex64>> = (0..m * m)
        .into_par_iter()
        .map(|idx| {
            let k = grid.frequency(idx / m);
            let w = grid.frequency(idx % m);
            let damp = (-0.5 * smoothing * smoothing * (k * k + w * w)).exp();
            Ok(joint_char(lat, &[k], w)? * damp)
        })
        .collect();
    invert_joint_density(grid, &values?)
}
