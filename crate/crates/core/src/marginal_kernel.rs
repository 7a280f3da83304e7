//! The kernel `K^(n)(kk, l) = (1/2pi) int exp(i(kk w^n - l w)) dw`, its
//! Wick-rotated form, the small-`kk` series, and the conditional n-marginal
//! characteristic function.
//!
//! On the real `l` axis the kernel is complex and only conditionally
//! integrable (for `n = 2` its modulus is constant). Rotating `l` by
//! `-pi/(2n)` gives the real, rapidly decaying
//!
//! ```text
//! K_W(kk, lambda) = (1/pi) int_0^inf exp(-kk xi^n) cos(lambda xi) dxi
//!                 = exp(-i pi/(2n)) K(kk, lambda exp(-i pi/(2n)))
//! ```
//!
//! which carries unit mass and is what every integral against the kernel
//! in this crate is taken over.

use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::jump_intensity::{orientation, JumpIntensitySpec};
use crate::operator_algebra::StableIndex;
use statrs::function::gamma::ln_gamma;

use crate::quadrature::{integrate_panels, Tolerance};

/// Default `|k|` below which [`n_marginal_char`] uses the closed form.
pub const CLOSED_FORM_THRESHOLD: f64 = 1e-3;

/// `a_n = cos(pi (n-1) / (2n))`.
pub fn a_n(n: u32) -> f64 {
    let n = n as f64;
    (PI * (n - 1.0) / (2.0 * n)).cos()
}

fn check_kk(kk: f64) -> Result<()> {
    if kk > 0.0 && kk.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("kernel needs frak_k > 0, got {kk}")))
    }
}

fn binomial(n: u32, j: u32) -> f64 {
    (1..=j).fold(1.0, |acc, i| acc * (n - j + i) as f64 / i as f64)
}

fn linspace(a: f64, b: f64, panels: usize) -> Vec<f64> {
    (0..=panels)
        .map(|i| a + (b - a) * i as f64 / panels as f64)
        .collect()
}

/// Complex kernel on the real `l` axis, even `n >= 2`.
///
/// Integrates along `w = s + xi e^{i pi/(2n)}` through the real saddle
/// `s`, where the integrand has modulus at most one and decays like
/// `exp(-kk xi^n)`.
pub fn kernel(n: u32, frak_k: f64, frak_l: f64) -> Result<Complex64> {
    check_kk(frak_k)?;
    if n == 1 {
        return Err(Error::Distributional(
            "K^(1)(kk, l) is the point mass at l = kk".into(),
        ));
    }
    if n % 2 == 1 {
        return Err(Error::Unsupported(format!(
            "n = {n} is odd; use kernel_odd_experimental"
        )));
    }
    if n == 0 || !frak_l.is_finite() {
        return Err(Error::Domain("kernel needs n >= 2 and finite l".into()));
    }
    let nf = n as f64;
    let phi = PI / (2.0 * nf);
    let u = Complex64::from_polar(1.0, phi);
    let s = frak_l.signum() * (frak_l.abs() / (nf * frak_k)).powf(1.0 / (nf - 1.0));
    let f_s = frak_k * s.powi(n as i32) - frak_l * s;
    let coeffs: Vec<f64> = (2..=n)
        .map(|j| frak_k * binomial(n, j) * s.powi((n - j) as i32))
        .collect();
    // exponent relative to the saddle; the linear term vanishes there
    let g = |xi: f64| {
        let z = u * xi;
        let mut zp = z;
        let mut acc = Complex64::new(0.0, 0.0);
        for c in &coeffs {
            zp *= z;
            acc += zp * *c;
        }
        acc
    };
    let decay = 45.0;
    let reach = |sign: f64| {
        let quad = if n > 2 { coeffs[0].abs() } else { 0.0 };
        let mut l = (decay / frak_k).powf(1.0 / nf);
        if quad > 0.0 {
            l = l.min((decay / (quad * (2.0 * phi).sin())).sqrt());
        }
        while g(sign * l).im < decay {
            l *= 1.5;
        }
        l
    };
    let (lo, hi) = (reach(-1.0), reach(1.0));
    let mut breaks = linspace(-lo, 0.0, 16);
    breaks.extend(linspace(0.0, hi, 16).into_iter().skip(1));
    let width = lo + hi;
    let est = integrate_panels(
        |xi| (Complex64::i() * g(xi)).exp(),
        &breaks,
        Tolerance::new(1e-15 * width, 1e-12),
    );
    let integral = est.require()?;
    Ok(u * Complex64::from_polar(1.0, f_s) * integral / (2.0 * PI))
}

/// Odd-`n` kernel through two Wick-rotated rays. Real-valued.
///
/// For `l > 0` the rays pick up a growth factor `exp(l rho sin(pi/(2n)))`
/// and the result comes from cancellation; a quadrature error is raised
/// when the growth exceeds `1e6` relative to the result.
pub fn kernel_odd_experimental(n: u32, frak_k: f64, frak_l: f64) -> Result<f64> {
    check_kk(frak_k)?;
    if n < 3 || n % 2 == 0 {
        return Err(Error::Domain(format!("odd n >= 3 expected, got {n}")));
    }
    let nf = n as f64;
    let phi = PI / (2.0 * nf);
    let u = Complex64::from_polar(1.0, phi);
    let expo = |rho: f64| -frak_k * rho.powi(n as i32) - Complex64::i() * frak_l * rho * u;
    let mut cut = (45.0 / frak_k).powf(1.0 / nf);
    while expo(cut).re > -45.0 {
        cut *= 1.5;
    }
    let peak = (0..=400)
        .map(|i| expo(cut * i as f64 / 400.0).re)
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    let est = integrate_panels(
        |rho| expo(rho).exp(),
        &linspace(0.0, cut, 32),
        Tolerance::new(1e-15 * cut * peak.exp(), 1e-12),
    );
    let value = (u * est.require()?).re / PI;
    let growth = peak.exp() * cut / (value.abs() * PI);
    if growth > 1e6 {
        return Err(Error::Quadrature(format!(
            "odd-n kernel lost about {:.0} digits to cancellation",
            growth.log10()
        )));
    }
    Ok(value)
}

fn wick_cutoff(n: u32, frak_k: f64) -> f64 {
    (45.0 / frak_k).powf(1.0 / n as f64)
}

/// Wick-rotated kernel `K_W(kk, lambda)`, real with unit mass.
pub fn kernel_wick(n: u32, frak_k: f64, lambda: f64) -> Result<f64> {
    check_kk(frak_k)?;
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    let x = wick_cutoff(n, frak_k);
    let periods = lambda.abs() * x / (2.0 * PI);
    let panels = ((periods / 4.0).ceil() as usize).clamp(4, 4096);
    let scale = frak_k.powf(-1.0 / n as f64);
    let est = integrate_panels(
        |xi| Complex64::new((-frak_k * xi.powi(n as i32)).exp() * (lambda * xi).cos(), 0.0),
        &linspace(0.0, x, panels),
        Tolerance::new(1e-16 * scale, 1e-12),
    );
    Ok(est.require()?.re / PI)
}

/// `lambda` beyond which the exponentially decaying part of `K_W(kk, .)`
/// is below `e^-50`. The saddle of `exp(-xi^n + i lambda xi)` gives decay
/// `exp(-c lambda^{n/(n-1)})` with `c = (n-1) n^{-n/(n-1)} sin(pi/(2(n-1)))`.
///
/// For odd `n` the kernel also has an algebraic tail, see [`wick_odd_tail_moment`].
pub fn wick_reach(n: u32, frak_k: f64) -> f64 {
    if n < 2 {
        return f64::INFINITY;
    }
    let nf = n as f64;
    let c = (nf - 1.0) * nf.powf(-nf / (nf - 1.0)) * (PI / (2.0 * (nf - 1.0))).sin();
    (50.0 / c).powf((nf - 1.0) / nf) * frak_k.powf(1.0 / nf)
}

/// Algebraic tail of `K_W(1, lambda)` for odd `n`, integrated against
/// `lambda` over `[r, inf)`:
/// `K_W ~ (1/pi) sum_j (-1)^j / j! Gamma(nj+1) cos(pi (nj+1)/2) lambda^{-nj-1}`,
/// where only odd `j` survive. Zero for even `n`.
pub fn wick_odd_tail_moment(n: u32, r: f64) -> f64 {
    if n % 2 == 0 {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    for j in (1..40u32).step_by(2) {
        let nj = (n * j) as f64;
        let sign = if ((n * j + 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let log_mag = ln_gamma(nj + 1.0) - ln_gamma(j as f64 + 1.0) + (1.0 - nj) * r.ln()
            - (nj - 1.0).ln();
        if log_mag > prev {
            break;
        }
        prev = log_mag;
        sum -= sign * log_mag.exp();
    }
    sum / PI
}

/// Lower incomplete gamma by its power series,
/// `gamma(s, x) = x^s e^{-x} sum_{p<=p_max} x^p / (s (s+1) ... (s+p))`.
pub fn truncated_gamma(s: f64, x: f64, p_max: usize) -> f64 {
    let mut term = 1.0 / s;
    let mut sum = term;
    for p in 1..=p_max {
        term *= x / (s + p as f64);
        sum += term;
    }
    x.powf(s) * (-x).exp() * sum
}

/// `A_p(m) = sum_j (-1)^j (m pi/2)^{2j+1} / ((2j+1)! prod_{q=1}^p ((2j+1)/n + q))`.
pub fn frak_a(p: usize, m_quant: u32, n: u32) -> f64 {
    let z = m_quant as f64 * PI / 2.0;
    let nf = n as f64;
    let mut term = z; // z^{2j+1}/(2j+1)! at j = 0
    let mut sum = 0.0;
    for j in 0..200 {
        let odd = (2 * j + 1) as f64;
        let denom: f64 = (1..=p).map(|q| odd / nf + q as f64).product();
        let contrib = term / denom;
        sum += contrib;
        if contrib.abs() < 1e-18 * sum.abs().max(1e-300) && j > 2 {
            break;
        }
        term *= -z * z / ((odd + 1.0) * (odd + 2.0));
    }
    sum
}

/// Small-`kk` series of the kernel.
///
/// With `x = (m pi / (2 a_n l))^n kk` the partial sum
/// `(2 a_n / (m pi^2)) (x / kk)^{1/n} e^{-x} sum_{p<=p_max} A_p(m) x^p`
/// approximates `a_n K_W(kk, a_n l)` once `x` is large.
pub fn kernel_smallk_series(
    n: u32,
    frak_k: f64,
    frak_l: f64,
    p_max: usize,
    m_quant: u32,
) -> Result<f64> {
    check_kk(frak_k)?;
    if frak_l == 0.0 {
        return Err(Error::Domain("l = 0 leaves x undefined".into()));
    }
    if m_quant == 0 {
        return Err(Error::invalid("m_quant", "must be positive"));
    }
    let an = a_n(n);
    let nf = n as f64;
    let x = (m_quant as f64 * PI / (2.0 * an * frak_l.abs())).powf(nf) * frak_k;
    let mut sum = 0.0;
    let mut xp = 1.0;
    for p in 0..=p_max {
        sum += frak_a(p, m_quant, n) * xp;
        xp *= x;
    }
    let pref = 2.0 * an / (m_quant as f64 * PI * PI) * (x / frak_k).powf(1.0 / nf);
    Ok(pref * (-x).exp() * sum)
}

/// `G = C pi / (2 a_n)`.
pub fn gfactor(n: u32, frak_c: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    if !(frak_c > 0.0 && frak_c.is_finite()) {
        return Err(Error::invalid("frak_c", "must be positive"));
    }
    Ok(frak_c * PI / (2.0 * a_n(n)))
}

/// Centroid `int |lambda| K_W(1, lambda) d lambda` by nested quadrature.
///
/// For `n = 1` the kernel is a point mass at `kk` and the centroid is 1.
pub fn wick_centroid(n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    if n == 1 {
        return Ok(1.0);
    }
    let reach = wick_reach(n, 1.0);
    let est = integrate_panels(
        |lam| Complex64::new(lam * kernel_wick(n, 1.0, lam).unwrap_or(f64::NAN), 0.0),
        &linspace(0.0, reach, 16),
        Tolerance::new(1e-13, 1e-11),
    );
    // int_reach^inf lambda * tail, the remaining odd-n contribution
    let tail = wick_odd_tail_moment(n, reach);
    Ok(2.0 * (est.require()?.re + tail))
}

/// `C_n = 2 a_n G_n / pi` from the centroid.
pub fn calibrate_frak_c(n: u32) -> Result<f64> {
    Ok(2.0 * a_n(n) * wick_centroid(n)? / PI)
}

/// Current schema of the shipped calibration table.
pub const FRAK_C_SCHEMA_VERSION: u32 = 1;

const FRAK_C_TABLE: &str = include_str!("../data/frak_c.txt");

fn parse_frak_c(text: &str) -> Result<Vec<(u32, f64)>> {
    let mut rows = Vec::new();
    let mut version = None;
    for line in text.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("# schema_version") {
            version = rest.trim().parse::<u32>().ok();
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(n), Some(c)) = (it.next(), it.next()) else {
            return Err(Error::Config(format!("bad frak_c row `{line}`")));
        };
        let n = n.parse().map_err(|_| Error::Config(format!("bad n in `{line}`")))?;
        let c = c.parse().map_err(|_| Error::Config(format!("bad value in `{line}`")))?;
        rows.push((n, c));
    }
    if version != Some(FRAK_C_SCHEMA_VERSION) {
        return Err(Error::Config(format!(
            "frak_c table schema {version:?}, expected {FRAK_C_SCHEMA_VERSION}"
        )));
    }
    Ok(rows)
}

fn frak_c_table() -> &'static [(u32, f64)] {
    static TABLE: OnceLock<Vec<(u32, f64)>> = OnceLock::new();
    TABLE.get_or_init(|| parse_frak_c(FRAK_C_TABLE).expect("shipped frak_c table parses"))
}

/// Frozen calibration constant `C_n`.
pub fn frak_c(n: u32) -> Result<f64> {
    frak_c_table()
        .iter()
        .find(|(m, _)| *m == n)
        .map(|(_, c)| *c)
        .ok_or_else(|| Error::Unsupported(format!("no calibrated constant for n = {n}")))
}

/// `G_n` from the frozen table.
pub fn frak_g(n: u32) -> Result<f64> {
    gfactor(n, frak_c(n)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalQuery {
    pub spec: JumpIntensitySpec,
    pub n: u32,
    pub k: f64,
    pub delta_t: f64,
    pub sigma: Vec<f64>,
    pub beta: f64,
}

impl MarginalQuery {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.n == 0 {
            return Err(Error::invalid("n", "must be at least 1"));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::invalid("beta", format!("must lie in (0, 1], got {}", self.beta)));
        }
        if !(self.delta_t > 0.0 && self.delta_t.powf(self.beta) <= 1.0) {
            return Err(Error::invalid(
                "delta_t",
                format!("need 0 < delta_t^beta <= 1, got delta_t = {}", self.delta_t),
            ));
        }
        if self.sigma.len() != self.spec.dim() {
            return Err(Error::Contract(format!(
                "sigma has length {}, jump law has dimension {}",
                self.sigma.len(),
                self.spec.dim()
            )));
        }
        if self.sigma_norm() == 0.0 {
            return Err(Error::invalid("sigma", "volatility vector must be nonzero"));
        }
        if !self.k.is_finite() {
            return Err(Error::Domain("k must be finite".into()));
        }
        Ok(())
    }

    pub fn sigma_norm(&self) -> f64 {
        self.sigma.iter().map(|s| s * s).sum::<f64>().sqrt()
    }
}

/// Conditional n-marginal characteristic function with the default
/// closed-form threshold.
pub fn n_marginal_char(q: &MarginalQuery) -> Result<Complex64> {
    n_marginal_char_with(q, CLOSED_FORM_THRESHOLD)
}

pub fn n_marginal_char_with(q: &MarginalQuery, threshold: f64) -> Result<Complex64> {
    q.validate()?;
    if q.k == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    if q.k.abs() <= threshold || q.n == 1 {
        n_marginal_closed(q).map(|v| Complex64::new(v, 0.0))
    } else {
        n_marginal_quadrature(q)
    }
}

/// Small-`k` closed form. Real and even in `k`; exact for `n = 1`.
pub fn n_marginal_closed(q: &MarginalQuery) -> Result<f64> {
    n_marginal_closed_log(q).map(f64::exp)
}

/// Logarithm of [`n_marginal_closed`], finite where the value underflows.
pub fn n_marginal_closed_log(q: &MarginalQuery) -> Result<f64> {
    q.validate()?;
    if q.k == 0.0 {
        return Ok(0.0);
    }
    let g = frak_g(q.n)?;
    let base = g * q.sigma_norm() * q.k.abs().powf(1.0 / q.n as f64);
    let time = q.delta_t.powf(q.beta);
    match q.spec.index {
        StableIndex::PureScaling { .. } => {
            Ok(q.spec.amplitude * base.powf(q.spec.radial_exponent()) * time)
        }
        StableIndex::ScalingRotation { mu, b } => {
            let m = q.spec.rotation_mode_m;
            let den = base.ln() + q.beta / (2.0 * mu) * q.delta_t.ln();
            if den.abs() < 1e-12 || !den.is_finite() {
                return Err(Error::SingularArgument(format!(
                    "Omega denominator vanishes at k = {}",
                    q.k
                )));
            }
            let omega = (orientation(&q.sigma) - b * q.beta * q.delta_t.ln()) / den;
            let growth = (m + 1) as f64;
            let unit = 2.0 * PI / (mu * b) / m as f64 * omega;
            let mut factor = growth;
            let mut sum = (unit * factor).cos();
            for _ in 1..=q.spec.q_truncation {
                factor *= growth;
                sum += 2.0 * (unit * factor).cos();
            }
            Ok(q.spec.amplitude * base.powf(2.0 * mu) * time * sum)
        }
    }
}

/// Quadrature branch,
/// `2 int_0^inf exp(C' lambda^a e^{-i a pi/(2n)}) K_W(kk, lambda) d lambda`
/// with `kk = |k| |sigma|^n`, `C' = C delta_t^beta`, `a = d mu`.
/// Negative `k` returns the conjugate.
pub fn n_marginal_quadrature(q: &MarginalQuery) -> Result<Complex64> {
    q.validate()?;
    if q.k == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    if !matches!(q.spec.index, StableIndex::PureScaling { .. }) {
        return Err(Error::Unsupported(
            "quadrature branch needs the analytic continuation of a pure-scaling law".into(),
        ));
    }
    if q.n < 2 {
        return Err(Error::Unsupported("quadrature branch needs n >= 2".into()));
    }
    let n = q.n;
    let alpha = q.spec.radial_exponent();
    let kk = q.k.abs() * q.sigma_norm().powi(n as i32);
    let c_eff = q.spec.amplitude * q.delta_t.powf(q.beta);
    let rot = Complex64::from_polar(c_eff, -alpha * PI / (2.0 * n as f64));
    // the continued intensity is also negligible past this point
    let damp = (45.0 / (-c_eff * (alpha * PI / (2.0 * n as f64)).cos())).powf(1.0 / alpha);
    let reach = wick_reach(n, kk).min(damp);
    let failed = std::cell::Cell::new(None);
    let est = integrate_panels(
        |lam| {
            let kw = match kernel_wick(n, kk, lam) {
                Ok(v) => v,
                Err(e) => {
                    failed.set(Some(e));
                    0.0
                }
            };
            (rot * lam.powf(alpha)).exp() * kw
        },
        &linspace(0.0, reach, 8),
        Tolerance::new(1e-13, 1e-10),
    );
    if let Some(e) = failed.into_inner() {
        return Err(e);
    }
    let v = 2.0 * est.require()?;
    Ok(if q.k < 0.0 { v.conj() } else { v })
}

/// Sign of the first moment of `(sigma . dL)^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentFlag {
    Infinite,
    Zero,
}

/// Even powers of a heavy-tailed symmetric jump have infinite mean; odd
/// powers vanish by symmetry.
pub fn fluctuation_moment_flag(n: u32) -> Result<MomentFlag> {
    if n < 2 {
        return Err(Error::Contract(format!("moment flag needs n >= 2, got {n}")));
    }
    Ok(if n % 2 == 0 {
        MomentFlag::Infinite
    } else {
        MomentFlag::Zero
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_real;
    use statrs::function::erf::erf;
    use statrs::function::gamma::gamma;

    fn fresnel_n2(kk: f64, l: f64) -> Complex64 {
        Complex64::from_polar(1.0, PI / 4.0 - l * l / (4.0 * kk)) / (2.0 * (PI * kk).sqrt())
    }

    #[test]
    fn a_n_values() {
        assert_eq!(a_n(1), 1.0);
        assert!((a_n(2) - 0.5f64.sqrt()).abs() < 1e-15);
        for n in 1..40 {
            assert!(a_n(n) > 0.0 && a_n(n) <= 1.0);
        }
    }

    #[test]
    fn gaussian_kernel_at_origin() {
        for kk in [0.1, 1.0, 10.0] {
            let k = kernel(2, kk, 0.0).unwrap();
            assert!((k - fresnel_n2(kk, 0.0)).norm() < 1e-12, "{kk}");
        }
    }

    #[test]
    fn fresnel_closed_form() {
        for (kk, l) in [(1.0, 3.0), (0.3, -2.0), (5.0, 40.0)] {
            let k = kernel(2, kk, l).unwrap();
            let f = fresnel_n2(kk, l);
            assert!((k - f).norm() < 1e-12 * f.norm().max(1.0), "{kk} {l}: {k} vs {f}");
        }
    }

    #[test]
    fn wick_relation_for_n2() {
        // K_W(kk, lambda) = exp(-lambda^2/(4kk)) / (2 sqrt(pi kk))
        for (kk, lam) in [(0.1, 0.3), (1.0, 2.5), (10.0, -7.0)] {
            let v = kernel_wick(2, kk, lam).unwrap();
            let want = (-lam * lam / (4.0 * kk)).exp() / (2.0 * (PI * kk).sqrt());
            assert!((v - want).abs() < 1e-13, "{v} {want}");
        }
    }

    #[test]
    fn odd_kernel_matches_symmetry() {
        // n = 3 at l = 0: (1/pi) Re[e^{i pi/6} Gamma(4/3) kk^{-1/3}]
        let v = kernel_odd_experimental(3, 1.0, 0.0).unwrap();
        let want = (PI / 6.0).cos() * gamma(4.0 / 3.0) / PI;
        assert!((v - want).abs() < 1e-12);
        assert!(kernel_odd_experimental(3, 1.0, -2.0).unwrap().is_finite());
        assert!(matches!(kernel(3, 1.0, 0.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn kernel_domain_errors() {
        assert!(matches!(kernel(2, 0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(kernel(4, -1.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(kernel(1, 1.0, 1.0), Err(Error::Distributional(_))));
    }

    #[test]
    fn wick_kernel_unit_mass_n4() {
        let kk = 1.0;
        let mass = integrate_real(
            |l| kernel_wick(4, kk, l).unwrap(),
            -wick_reach(4, kk),
            wick_reach(4, kk),
            Tolerance::new(1e-12, 1e-10),
        )
        .unwrap();
        assert!((mass - 1.0).abs() < 1e-8, "{mass}");
    }

    #[test]
    fn contour_equivalence() {
        // int K(kk, l) g(l) dl over the real line with g(l) = exp(-l^2) equals
        // int K_W(kk, lambda) g(lambda e^{-i pi/8}) d lambda for n = 4.
        let kk = 0.7;
        let phi = PI / 8.0;
        let direct = integrate_panels(
            |l| kernel(4, kk, l).unwrap() * (-l * l).exp(),
            &linspace(-7.0, 7.0, 14),
            Tolerance::new(1e-13, 1e-11),
        )
        .require()
        .unwrap();
        let rotated = integrate_panels(
            |lam| {
                let z = Complex64::from_polar(lam, -phi);
                (-(z * z)).exp() * kernel_wick(4, kk, lam).unwrap()
            },
            &linspace(-12.0, 12.0, 24),
            Tolerance::new(1e-13, 1e-11),
        )
        .require()
        .unwrap();
        assert!((direct - rotated).norm() < 1e-9, "{direct} vs {rotated}");
    }

    #[test]
    fn truncated_gamma_converges() {
        let want = PI.sqrt() * erf(1.0);
        assert!((truncated_gamma(0.5, 1.0, 30) - want).abs() < 1e-10);
        // independent route: Gamma(s) minus Lentz continued fraction of Gamma(s, x)
        let (s, x) = (2.3, 1.7);
        let upper = {
            let tiny = 1e-300;
            let mut b = x + 1.0 - s;
            let mut c = 1.0 / tiny;
            let mut d = 1.0 / b;
            let mut h = d;
            for i in 1..200 {
                let an = -(i as f64) * (i as f64 - s);
                b += 2.0;
                d = an * d + b;
                d = 1.0 / d;
                c = b + an / c;
                let del = d * c;
                h *= del;
                if (del - 1.0).abs() < 1e-16 {
                    break;
                }
            }
            (-x + s * x.ln()).exp() * h
        };
        assert!((truncated_gamma(s, x, 60) - (gamma(s) - upper)).abs() < 1e-12);
    }

    #[test]
    fn frak_a_values() {
        assert!((frak_a(0, 1, 2) - 1.0).abs() < 1e-15);
        assert!(frak_a(0, 2, 2).abs() < 1e-15);
        // pinned: A_1(2) at n = 2
        assert!((frak_a(1, 2, 2) - 2.0 / PI).abs() < 1e-14);
        for (p, m, n) in [(1usize, 1u32, 2u32), (3, 1, 4), (2, 2, 6), (5, 3, 2)] {
            let fact: f64 = (1..p).map(|i| i as f64).product();
            let z = m as f64 * PI / 2.0;
            let oracle = integrate_real(
                |u| (1.0 - u).powi(p as i32 - 1) * (z * u.powf(1.0 / n as f64)).sin(),
                0.0,
                1.0,
                Tolerance::new(1e-15, 1e-13),
            )
            .unwrap()
                / fact;
            assert!((frak_a(p, m, n) - oracle).abs() < 1e-12, "{p} {m} {n}");
        }
    }

    #[test]
    fn smallk_series_tracks_wick_kernel() {
        let kk = 1e-4f64;
        for n in [2u32, 4] {
            let an = a_n(n);
            for x in [8.0f64, 16.0] {
                let l = PI / (2.0 * an) * (kk / x).powf(1.0 / n as f64);
                let s = kernel_smallk_series(n, kk, l, 60, 1).unwrap();
                let w = an * kernel_wick(n, kk, an * l).unwrap();
                assert!((s / w - 1.0).abs() < 1e-2, "n={n} x={x}: {s} vs {w}");
            }
        }
        assert!(matches!(kernel_smallk_series(2, 1.0, 0.0, 5, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn gfactor_values() {
        assert!((gfactor(1, 1.0).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((gfactor(2, 1.0).unwrap() - PI / 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn shipped_table_matches_centroid_oracle() {
        assert!((frak_g(1).unwrap() - 1.0).abs() < 1e-12);
        for n in 2..=12u32 {
            let analytic = 2.0 / (n as f64 * PI) * gamma(-1.0 / n as f64).abs();
            assert!((frak_g(n).unwrap() / analytic - 1.0).abs() < 1e-9, "n = {n}");
        }
        assert!((frak_g(2).unwrap() - 2.0 / PI.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn centroid_quadrature_n2() {
        assert!((wick_centroid(2).unwrap() - 2.0 / PI.sqrt()).abs() < 1e-9);
    }

    fn query(spec: JumpIntensitySpec, n: u32, k: f64, dt: f64, beta: f64) -> MarginalQuery {
        MarginalQuery {
            spec,
            n,
            k,
            delta_t: dt,
            sigma: vec![1.0; spec.dim()],
            beta,
        }
    }

    #[test]
    fn marginal_at_zero() {
        let q = query(JumpIntensitySpec::gaussian(), 2, 0.0, 0.5, 0.7);
        assert_eq!(n_marginal_char(&q).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn n1_closed_form_is_gaussian_power() {
        let q = query(JumpIntensitySpec::gaussian(), 1, 0.8, 0.3, 0.6);
        let v = n_marginal_char(&q).unwrap();
        let want = (-0.8f64 * 0.8 / 2.0).exp().powf(0.3f64.powf(0.6));
        assert!((v.re - want).abs() < 1e-14 && v.im == 0.0);
    }

    #[test]
    fn quadrature_gaussian_n2_closed_oracle() {
        // U ~ N(0, 2|C'|): E exp(i kk U^2) = (1 - 4 i kk |C'|)^{-1/2}
        let (dt, beta) = (0.4, 0.8);
        for k in [0.05, 0.7, 3.0, -1.3] {
            let q = query(JumpIntensitySpec::gaussian(), 2, k, dt, beta);
            let c_abs = 0.5 * dt.powf(beta);
            let want = (Complex64::new(1.0, -4.0 * k * c_abs)).powf(-0.5);
            let got = n_marginal_quadrature(&q).unwrap();
            assert!((got - want).norm() < 1e-8, "k={k}: {got} vs {want}");
        }
    }

    #[test]
    fn quadrature_cauchy_n2_rotated_oracle() {
        // U Cauchy with scale g: rotate u -> v e^{i pi/4} in E exp(i kk U^2)
        let spec = JumpIntensitySpec::pure_scaling(1, 1.0, -1.0).unwrap();
        let (dt, beta, k) = (0.5f64, 0.9, 0.8);
        let g = dt.powf(beta);
        let u = Complex64::from_polar(1.0, PI / 4.0);
        let oracle = integrate_panels(
            |v| u * g / (PI * (g * g + Complex64::i() * v * v)) * (-k * v * v).exp(),
            &linspace(-12.0, 12.0, 24),
            Tolerance::new(1e-14, 1e-12),
        )
        .require()
        .unwrap();
        let got = n_marginal_quadrature(&query(spec, 2, k, dt, beta)).unwrap();
        assert!((got - oracle).norm() < 1e-8, "{got} vs {oracle}");
    }

    #[test]
    fn closed_and_quadrature_agree_at_small_k() {
        let spec = JumpIntensitySpec::pure_scaling(1, 0.9, -1.0).unwrap();
        let q = query(spec, 2, 1e-3, 0.01, 0.5);
        let c = n_marginal_closed(&q).unwrap();
        let quad = n_marginal_quadrature(&q).unwrap();
        assert!((quad - c).norm() / quad.norm() <= 1e-2);
    }

    #[test]
    fn hermitian_in_k() {
        let spec = JumpIntensitySpec::pure_scaling(1, 1.4, -0.6).unwrap();
        let a = n_marginal_quadrature(&query(spec, 4, 0.9, 0.2, 0.7)).unwrap();
        let b = n_marginal_quadrature(&query(spec, 4, -0.9, 0.2, 0.7)).unwrap();
        assert_eq!(a, b.conj());
        assert!(a.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn small_k_slope_diverges() {
        let spec = JumpIntensitySpec::pure_scaling(1, 1.5, -1.0).unwrap();
        let mut prev = 0.0;
        for j in 3..10 {
            let k = 10f64.powi(-j);
            let v = n_marginal_closed(&query(spec, 2, k, 0.5, 0.7)).unwrap();
            let slope = (v - 1.0) / k;
            assert!(slope < prev);
            prev = slope;
        }
        assert!(prev < -100.0);
    }

    #[test]
    fn time_scaling_closed_form() {
        let spec = JumpIntensitySpec::pure_scaling(1, 0.9, -1.3).unwrap();
        for dt in [0.01, 0.3, 0.9] {
            let a = n_marginal_closed(&query(spec, 2, 5e-4, dt, 0.6)).unwrap();
            let b = n_marginal_closed(&query(spec, 2, 5e-4, 1.0, 0.6)).unwrap();
            assert!((a - b.powf(dt.powf(0.6))).abs() < 1e-15);
        }
    }

    #[test]
    fn rotation_closed_form_singular() {
        let spec = JumpIntensitySpec::rotation(0.8, 1.1, 1, -0.5, 10).unwrap();
        // choose k so that ln(G |sigma| k^{1/n}) = -beta/(2 mu) ln dt
        let (dt, beta, n) = (0.25, 0.5, 2);
        let g = frak_g(n).unwrap();
        let sig = 2f64.sqrt();
        let k = ((-beta / 1.6 * f64::ln(dt)).exp() / (g * sig)).powi(n as i32);
        let q = MarginalQuery {
            spec,
            n,
            k,
            delta_t: dt,
            sigma: vec![1.0, 1.0],
            beta,
        };
        let r = n_marginal_closed(&q);
        assert!(matches!(r, Err(Error::SingularArgument(_))), "{r:?}");
        let mut ok = q.clone();
        ok.k = 1e-4;
        assert!(n_marginal_closed(&ok).unwrap().is_finite());
        assert!(matches!(n_marginal_quadrature(&ok), Err(Error::Unsupported(_))));
    }

    #[test]
    fn moment_flags() {
        assert_eq!(fluctuation_moment_flag(2).unwrap(), MomentFlag::Infinite);
        assert_eq!(fluctuation_moment_flag(3).unwrap(), MomentFlag::Zero);
        assert_eq!(fluctuation_moment_flag(4).unwrap(), MomentFlag::Infinite);
        assert!(matches!(fluctuation_moment_flag(1), Err(Error::Contract(_))));
    }

    #[test]
    fn query_validation() {
        let mut q = query(JumpIntensitySpec::gaussian(), 2, 0.1, 2.0, 0.5);
        assert!(q.validate().is_err());
        q.delta_t = 0.5;
        q.sigma = vec![0.0];
        assert!(q.validate().is_err());
    }
}
