//! Backward solver for the modified Black-Scholes equation in `x = ln S`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Write;

use super::deviation::SurfaceJet;
use super::tail::TailLaw;
use super::OptionSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Number of intervals in `ln S`.
    #[serde(default = "default_steps")]
    pub n_space: usize,
    /// Number of time steps.
    #[serde(default = "default_steps")]
    pub n_time: usize,
    /// Half-width of the `ln S` window in units of `sigma_eff sqrt(T)`.
    #[serde(default = "default_width")]
    pub width: f64,
    #[serde(default = "default_sigma")]
    pub sigma_eff: f64,
    /// Implicit Euler half-steps before Crank-Nicolson.
    #[serde(default = "default_rannacher")]
    pub rannacher_steps: usize,
    /// Taylor order for the jet and the tail check.
    #[serde(default = "default_n_max")]
    pub n_max: usize,
}

fn default_steps() -> usize {
    400
}
fn default_width() -> f64 {
    6.0
}
fn default_sigma() -> f64 {
    1.0
}
fn default_rannacher() -> usize {
    4
}
fn default_n_max() -> usize {
    8
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            n_space: default_steps(),
            n_time: default_steps(),
            width: default_width(),
            sigma_eff: default_sigma(),
            rannacher_steps: default_rannacher(),
            n_max: default_n_max(),
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_space < 8 || self.n_space % 2 != 0 {
            return Err(Error::invalid("n_space", "must be even and at least 8"));
        }
        if self.n_time == 0 {
            return Err(Error::invalid("n_time", "must be positive"));
        }
        if !(self.width > 0.0) {
            return Err(Error::invalid("width", "must be positive"));
        }
        if !(self.sigma_eff > 0.0) {
            return Err(Error::invalid("sigma_eff", "must be positive"));
        }
        if self.n_max < 2 {
            return Err(Error::invalid("n_max", "must be at least 2"));
        }
        Ok(())
    }
}

/// The small-k correction `(1/(eps m^mu)) lim P^{-1}/(P^{-1})' + P''(0)/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum Correction {
    Disabled,
    Enabled {
        tail: TailLaw,
        mu: f64,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        frak_m: f64,
        #[serde(default = "default_probes")]
        probes: [f64; 2],
        #[serde(default = "default_probe_tol")]
        probe_tol: f64,
    },
}

fn default_epsilon() -> f64 {
    1e-2
}
fn default_probes() -> [f64; 2] {
    [1e-4, 1e-5]
}
fn default_probe_tol() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitProbe {
    pub first: Complex64,
    pub second: Complex64,
    /// `(1/(eps m^mu)) Re(second)`.
    pub constant: f64,
}

impl Correction {
    /// Evaluates the limit at the two probes.
    pub fn limit(&self) -> Result<Option<LimitProbe>> {
        match self {
            Correction::Disabled => Ok(None),
            Correction::Enabled {
                tail,
                mu,
                epsilon,
                frak_m,
                probes,
                probe_tol,
            } => {
                let at = |k: f64| tail.inverse_ratio(Complex64::new(0.0, epsilon / k));
                let first = at(probes[0])?;
                let second = at(probes[1])?;
                let diff = (first - second).norm();
                if !(diff <= probe_tol * second.norm().max(1.0)) {
                    return Err(Error::LimitEvaluation {
                        first: first.norm(),
                        second: second.norm(),
                    });
                }
                Ok(Some(LimitProbe {
                    first,
                    second,
                    constant: second.re / (epsilon * frak_m.powf(*mu)),
                }))
            }
        }
    }
}

/// Surface `values[ti][si]` on log-spaced `s_nodes` and increasing `t_nodes`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptionGrid {
    pub s_nodes: Vec<f64>,
    pub t_nodes: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub rate: f64,
    pub sigma_eff: f64,
}

impl OptionGrid {
    fn dx(&self) -> f64 {
        (self.s_nodes[1] / self.s_nodes[0]).ln()
    }

    /// Linear interpolation in `ln S` at time index `ti`.
    pub fn price_at(&self, s: f64, ti: usize) -> Result<f64> {
        let x0 = self.s_nodes[0].ln();
        let u = (s.ln() - x0) / self.dx();
        if !(u >= 0.0) || u > (self.s_nodes.len() - 1) as f64 {
            return Err(Error::Boundary { spot: s });
        }
        let i = (u.floor() as usize).min(self.s_nodes.len() - 2);
        let w = u - i as f64;
        Ok((1.0 - w) * self.values[ti][i] + w * self.values[ti][i + 1])
    }

    fn dc_dt(&self, si: usize, ti: usize) -> f64 {
        let nt = self.t_nodes.len();
        let v = |t: usize| self.values[t][si];
        if ti == 0 {
            (v(1) - v(0)) / (self.t_nodes[1] - self.t_nodes[0])
        } else if ti == nt - 1 {
            (v(nt - 1) - v(nt - 2)) / (self.t_nodes[nt - 1] - self.t_nodes[nt - 2])
        } else {
            (v(ti + 1) - v(ti - 1)) / (self.t_nodes[ti + 1] - self.t_nodes[ti - 1])
        }
    }

    /// Value and `d^n C / dS^n`, `n = 1..=n_max`, from a centred stencil.
    pub fn jet(&self, si: usize, ti: usize, n_max: usize) -> Result<SurfaceJet> {
        let half = (n_max + 2) / 2;
        let spot = self.s_nodes[si];
        if si < half || si + half >= self.s_nodes.len() {
            return Err(Error::Boundary { spot });
        }
        let nodes = &self.s_nodes[si - half..=si + half];
        let w = fornberg_weights(spot, nodes, n_max);
        let vals = &self.values[ti][si - half..=si + half];
        let derivs = (1..=n_max)
            .map(|m| w[m].iter().zip(vals).map(|(a, b)| a * b).sum())
            .collect();
        Ok(SurfaceJet {
            spot,
            value: self.values[ti][si],
            dc_dt: self.dc_dt(si, ti),
            derivs,
        })
    }

    pub fn write_csv<W: Write>(&self, residual: &[Vec<f64>], out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["s", "t", "c", "residual"])?;
        for (ti, t) in self.t_nodes.iter().enumerate() {
            for (si, s) in self.s_nodes.iter().enumerate() {
                wtr.write_record([
                    format!("{s:e}"),
                    format!("{t:e}"),
                    format!("{:e}", self.values[ti][si]),
                    format!("{:e}", residual[ti][si]),
                ])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Finite-difference weights for derivatives `0..=m` at `x0`.
pub fn fornberg_weights(x0: f64, nodes: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// `[C_t + r S C_S + (sigma^2 S^2 / 2) C_SS - r C] - correction` at an interior
/// node, with `P''(0)/2` taken from `P` where finite and from `S^2 C_SS / 2`
/// otherwise.
pub fn pde_residual(grid: &OptionGrid, si: usize, ti: usize, correction: &Correction) -> Result<f64> {
    if ti + 1 == grid.t_nodes.len() {
        return Err(Error::Contract(
            "terminal slice carries the payoff; the residual is not evaluated there".into(),
        ));
    }
    if si == 0 || si + 1 == grid.s_nodes.len() {
        return Err(Error::Boundary {
            spot: grid.s_nodes[si],
        });
    }
    let dx = grid.dx();
    let v = &grid.values[ti];
    let cx = (v[si + 1] - v[si - 1]) / (2.0 * dx);
    let cxx = (v[si + 1] - 2.0 * v[si] + v[si - 1]) / (dx * dx);
    let s2css = cxx - cx;
    let (lo, mid, up) = fitted_stencil(0.5 * grid.sigma_eff.powi(2), grid.rate, dx);
    let bs = grid.dc_dt(si, ti) + lo * v[si - 1] + mid * v[si] + up * v[si + 1];
    let corr = match correction {
        Correction::Disabled => 0.0,
        Correction::Enabled { tail, .. } => {
            let probe = correction.limit()?.expect("enabled");
            let p2 = tail.second_derivative_at_zero().unwrap_or(s2css);
            probe.constant + 0.5 * p2
        }
    };
    Ok(bs - corr)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub schema_version: u32,
    pub max_residual: f64,
    pub atm_price: f64,
    /// Closed-form price when the correction is disabled.
    pub black_scholes: Option<f64>,
    pub bound_violations: usize,
    pub terminal_max_error: f64,
    pub tail_check: Vec<TailCheck>,
    pub probe: Option<LimitProbe>,
    pub epsilon: Option<f64>,
    pub frak_m: Option<f64>,
    pub theta: u32,
    pub n_max: usize,
}

/// `sum c_n x^n` against `T (ln x)^alpha` at the largest grid `x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailCheck {
    pub n_max: usize,
    pub x: f64,
    pub series: f64,
    pub target: Option<f64>,
    pub rel_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptionSolution {
    pub grid: OptionGrid,
    pub residual: Vec<Vec<f64>>,
    pub report: SolveReport,
}

pub const OPTION_SCHEMA_VERSION: u32 = 1;

/// `L C_j = lo C_{j-1} + mid C_j + up C_{j+1}` for `a C_xx + (r - a) C_x - r C`,
/// exact on `1` and `e^x`.
fn fitted_stencil(a: f64, r: f64, dx: f64) -> (f64, f64, f64) {
    let diff = 2.0 * a / (dx * dx);
    let up = (r + diff * (-(-dx).exp_m1())) / (2.0 * dx.sinh());
    (diff - up, -diff - r, up)
}

/// Standard Black-Scholes call.
pub fn black_scholes_call(s: f64, k: f64, r: f64, sigma: f64, tau: f64) -> f64 {
    if tau <= 0.0 {
        return (s - k).max(0.0);
    }
    let sd = sigma * tau.sqrt();
    let d1 = ((s / k).ln() + (r + 0.5 * sigma * sigma) * tau) / sd;
    let d2 = d1 - sd;
    let n = |x: f64| 0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2);
    s * n(d1) - k * (-r * tau).exp() * n(d2)
}

fn thomas(lower: f64, diag: f64, upper: f64, rhs: &mut [f64]) {
    let n = rhs.len();
    let mut c = vec![0.0; n];
    let mut beta = diag;
    rhs[0] /= beta;
    for i in 1..n {
        c[i] = upper / beta;
        beta = diag - lower * c[i];
        rhs[i] = (rhs[i] - lower * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i + 1] * rhs[i + 1];
    }
}

/// Solves backward from `max(S - K, 0)` at `T`. The correction is applied
/// explicitly from the previous level.
pub fn solve_option(spec: &OptionSpec, correction: &Correction, cfg: &GridConfig) -> Result<OptionSolution> {
    spec.validate()?;
    cfg.validate()?;
    let probe = correction.limit()?;
    let (sigma, r, big_t, strike) = (cfg.sigma_eff, spec.rate, spec.maturity, spec.strike);
    let m = cfg.n_space;
    let half_width = cfg.width * sigma * big_t.sqrt();
    let dx = 2.0 * half_width / m as f64;
    let x0 = strike.ln() - half_width;
    let s_nodes: Vec<f64> = (0..=m).map(|j| (x0 + j as f64 * dx).exp()).collect();
    let nt = cfg.n_time;
    let dt = big_t / nt as f64;
    let t_nodes: Vec<f64> = (0..=nt).map(|n| n as f64 * dt).collect();

    let a = 0.5 * sigma * sigma;
    // U = e^{r tau} C removes the reaction term; the discount is applied exactly
    let (lo, mid_r, up) = fitted_stencil(a, r, dx);
    let mid = mid_r + r;

    let (kappa, tail_p2) = match correction {
        Correction::Disabled => (None, None),
        Correction::Enabled { tail, .. } => (
            Some(probe.expect("enabled").constant),
            Some(tail.second_derivative_at_zero()),
        ),
    };

    let payoff: Vec<f64> = s_nodes.iter().map(|s| spec.payoff(*s)).collect();
    let mut levels = vec![payoff.clone()];
    let mut cur = payoff;
    let bound = 10.0 * s_nodes[m];
    let implicit_steps = cfg.rannacher_steps.div_ceil(2).min(nt);
    let mut tau = 0.0;
    for step in 0..nt {
        let subs: &[(f64, f64)] = if step < implicit_steps {
            &[(0.5, 1.0), (0.5, 1.0)]
        } else {
            &[(1.0, 0.5)]
        };
        for &(frac, theta) in subs {
            let h = frac * dt;
            let explicit: Vec<f64> = match kappa {
                None => vec![0.0; m + 1],
                Some(k) => (0..=m)
                    .map(|j| {
                        if j == 0 || j == m {
                            return 0.0;
                        }
                        let ux = (cur[j + 1] - cur[j - 1]) / (2.0 * dx);
                        let uxx = (cur[j + 1] - 2.0 * cur[j] + cur[j - 1]) / (dx * dx);
                        let p2 = match tail_p2.flatten() {
                            Some(p) => p * (r * tau).exp(),
                            None => uxx - ux,
                        };
                        -(k * (r * tau).exp() + 0.5 * p2)
                    })
                    .collect(),
            };
            tau += h;
            let mut rhs: Vec<f64> = (1..m)
                .map(|j| {
                    let lu = lo * cur[j - 1] + mid * cur[j] + up * cur[j + 1];
                    cur[j] + (1.0 - theta) * h * lu + h * explicit[j]
                })
                .collect();
            let left = 0.0;
            let right = s_nodes[m] * (r * tau).exp() - strike;
            rhs[0] += theta * h * lo * left;
            rhs[m - 2] += theta * h * up * right;
            thomas(-theta * h * lo, 1.0 - theta * h * mid, -theta * h * up, &mut rhs);
            cur = std::iter::once(left)
                .chain(rhs)
                .chain(std::iter::once(right))
                .collect();
        }
        let disc = (-r * tau).exp();
        let level: Vec<f64> = cur.iter().map(|u| u * disc).collect();
        let max_value = level.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if !(max_value <= bound) {
            return Err(Error::Stability {
                max_value,
                suggested_dt: (0.25 * dt).min(dx * dx / (sigma * sigma)),
            });
        }
        levels.push(level);
    }
    levels.reverse();
    let grid = OptionGrid {
        s_nodes,
        t_nodes,
        values: levels,
        rate: r,
        sigma_eff: sigma,
    };

    let mut residual = vec![vec![0.0; m + 1]; nt + 1];
    let mut max_residual = 0.0f64;
    for ti in 0..nt {
        for si in 1..m {
            let v = pde_residual(&grid, si, ti, correction)?;
            residual[ti][si] = v;
            max_residual = max_residual.max(v.abs());
        }
    }

    let mut violations = 0;
    for (ti, t) in grid.t_nodes.iter().enumerate() {
        let tau = big_t - t;
        for (si, s) in grid.s_nodes.iter().enumerate() {
            let c = grid.values[ti][si];
            let lower = (s - strike * (-r * tau).exp()).max(0.0);
            // rounding slack relative to the magnitudes involved
            let slack = 1e-10 * s.max(strike);
            if c < lower - slack || c > *s + slack || c < -slack {
                violations += 1;
            }
        }
    }
    let terminal_max_error = grid.s_nodes.iter().enumerate().fold(0.0f64, |acc, (si, s)| {
        acc.max((grid.values[nt][si] - spec.payoff(*s)).abs())
    });

    let atm_price = grid.price_at(strike, 0)?;
    let tail_target = match correction {
        Correction::Enabled {
            tail: TailLaw::LogTail { frak_t, tail_alpha },
            ..
        } => Some((*frak_t, *tail_alpha)),
        _ => None,
    };
    let atm = m / 2;
    let x_big = grid.s_nodes[m] / grid.s_nodes[atm] - 1.0;
    let mut tail_check = Vec::new();
    for n_max in [cfg.n_max, cfg.n_max.max(12)] {
        let jet = grid.jet(atm, 0, n_max)?;
        let series: f64 = jet
            .taylor_coeffs()
            .iter()
            .enumerate()
            .map(|(i, c)| c * x_big.powi(i as i32 + 2))
            .sum();
        let target = tail_target.map(|(t, al)| t * x_big.ln().powf(al));
        tail_check.push(TailCheck {
            n_max,
            x: x_big,
            series,
            target,
            rel_error: target.map(|t| ((series - t) / t).abs()),
        });
        if cfg.n_max >= 12 {
            break;
        }
    }

    let (epsilon, frak_m) = match correction {
        Correction::Enabled { epsilon, frak_m, .. } => (Some(*epsilon), Some(*frak_m)),
        Correction::Disabled => (None, None),
    };
    let report = SolveReport {
        schema_version: OPTION_SCHEMA_VERSION,
        max_residual,
        atm_price,
        black_scholes: match correction {
            Correction::Disabled => Some(black_scholes_call(strike, strike, r, sigma, big_t)),
            _ => None,
        },
        bound_violations: violations,
        terminal_max_error,
        tail_check,
        probe,
        epsilon,
        frak_m,
        theta: 1,
        n_max: cfg.n_max,
    };
    Ok(OptionSolution {
        grid,
        residual,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::option_engine::tail::solve_frak_m;

    fn spec() -> OptionSpec {
        OptionSpec {
            strike: 100.0,
            maturity: 1.0,
            rate: 0.05,
        }
    }

    #[test]
    fn fornberg_on_polynomials() {
        let nodes = [0.7, 1.0, 1.4, 1.9, 2.5];
        let w = fornberg_weights(1.2, &nodes, 4);
        let f: Vec<f64> = nodes.iter().map(|x: &f64| x.powi(4)).collect();
        let want = [1.2f64.powi(4), 4.0 * 1.2f64.powi(3), 12.0 * 1.44, 24.0 * 1.2, 24.0];
        for (m, wm) in want.iter().enumerate() {
            let got: f64 = w[m].iter().zip(&f).map(|(a, b)| a * b).sum();
            assert!((got - wm).abs() < 1e-9 * wm.abs().max(1.0), "m = {m}");
        }
    }

    #[test]
    fn closed_form_reference() {
        let v = black_scholes_call(100.0, 100.0, 0.05, 1.0, 1.0);
        assert!((v - 39.840_162_483_437).abs() < 1e-9);
        // put-call parity
        let put = v - 100.0 + 100.0 * (-0.05f64).exp();
        assert!(put > 0.0);
    }

    #[test]
    fn black_scholes_degeneracy() {
        let sol = solve_option(&spec(), &Correction::Disabled, &GridConfig::default()).unwrap();
        let bs = sol.report.black_scholes.unwrap();
        assert!((sol.report.atm_price - bs).abs() / bs < 1e-3);
        assert_eq!(sol.report.bound_violations, 0);
        assert_eq!(sol.report.terminal_max_error, 0.0);
    }

    #[test]
    fn residual_is_truncation_order_away_from_maturity() {
        let sol = solve_option(&spec(), &Correction::Disabled, &GridConfig::default()).unwrap();
        let m = sol.grid.s_nodes.len() - 1;
        let ti = sol.grid.t_nodes.len() / 2;
        let worst = (m / 4..3 * m / 4)
            .map(|si| sol.residual[ti][si].abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-2, "{worst}");
        assert!(pde_residual(&sol.grid, 5, sol.grid.t_nodes.len() - 1, &Correction::Disabled).is_err());
    }

    fn exact_grid(n: usize) -> OptionGrid {
        let half = 6.0;
        let dx = 2.0 * half / n as f64;
        let s_nodes: Vec<f64> = (0..=n).map(|j| (100f64.ln() - half + j as f64 * dx).exp()).collect();
        let t_nodes: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let values = t_nodes
            .iter()
            .map(|t| {
                s_nodes
                    .iter()
                    .map(|s| black_scholes_call(*s, 100.0, 0.05, 1.0, 1.0 - t))
                    .collect()
            })
            .collect();
        OptionGrid { s_nodes, t_nodes, values, rate: 0.05, sigma_eff: 1.0 }
    }

    #[test]
    fn residual_vs_closed_form_surface() {
        // the discrete operator on the exact surface is second order
        let coarse = exact_grid(200);
        let fine = exact_grid(400);
        let r1 = pde_residual(&coarse, 100, 100, &Correction::Disabled).unwrap();
        let r2 = pde_residual(&fine, 200, 200, &Correction::Disabled).unwrap();
        assert!(r2.abs() < 1e-2);
        assert!((r1 / r2 - 4.0).abs() < 0.2, "{r1} {r2}");
    }

    #[test]
    fn payoff_limits() {
        let sol = solve_option(&spec(), &Correction::Disabled, &GridConfig::default()).unwrap();
        let g = &sol.grid;
        let m = g.s_nodes.len() - 1;
        assert!(g.values[0][1] < 1e-8);
        let s = g.s_nodes[m - 1];
        let deep = s - 100.0 * (-0.05f64).exp();
        assert!((g.values[0][m - 1] - deep).abs() / deep < 1e-6);
    }

    #[test]
    fn quadratic_tail_limit_diverges() {
        let c = Correction::Enabled {
            tail: TailLaw::Power { coeff: 1.0, degree: 2 },
            mu: 1.5,
            epsilon: 1e-2,
            frak_m: solve_frak_m(1).unwrap(),
            probes: [1e-4, 1e-5],
            probe_tol: 1e-3,
        };
        assert!(matches!(c.limit(), Err(Error::LimitEvaluation { .. })));
        assert!(matches!(
            solve_option(&spec(), &c, &GridConfig::default()),
            Err(Error::LimitEvaluation { .. })
        ));
    }

    #[test]
    fn log_tail_correction_is_lagged_and_checked() {
        let c = Correction::Enabled {
            tail: TailLaw::LogTail { frak_t: 1e-2, tail_alpha: 0.75 },
            mu: 1.5,
            epsilon: 1e-2,
            frak_m: solve_frak_m(1).unwrap(),
            probes: [1e-4, 1e-5],
            probe_tol: 1e-3,
        };
        let probe = c.limit().unwrap().unwrap();
        assert!(probe.second.norm() < probe.first.norm());
        // the lagged -S^2 C_SS / 2 cancels the diffusion: pure transport at rate r
        let sol = solve_option(&spec(), &c, &GridConfig::default()).unwrap();
        let otm = sol.grid.price_at(50.0, 0).unwrap();
        assert!(black_scholes_call(50.0, 100.0, 0.05, 1.0, 1.0) > 5.0);
        assert!(otm.abs() < 0.1, "{otm}");
        assert_eq!(sol.report.tail_check.len(), 2);
        assert!(sol.report.tail_check[0].rel_error.is_some());
    }
}
