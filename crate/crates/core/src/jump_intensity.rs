//! Fourier transforms of the limiting jump intensity, the functional
//! equation they satisfy, and the asymptotic tail series of symmetric
//! stable densities.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::operator_algebra::{transpose_power_apply, StableIndex};

fn default_m() -> u32 {
    1
}

fn default_q() -> u32 {
    50
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpIntensitySpec {
    pub index: StableIndex,
    /// `C` for pure scaling, `D` for scaling with rotation. Must be negative.
    pub amplitude: f64,
    #[serde(default = "default_m")]
    pub rotation_mode_m: u32,
    #[serde(default = "default_q")]
    pub q_truncation: u32,
}

impl JumpIntensitySpec {
    pub fn new(index: StableIndex, amplitude: f64) -> Result<Self> {
        let s = JumpIntensitySpec {
            index,
            amplitude,
            rotation_mode_m: default_m(),
            q_truncation: default_q(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn pure_scaling(d: usize, mu: f64, c: f64) -> Result<Self> {
        Self::new(StableIndex::pure_scaling(d, mu)?, c)
    }

    pub fn rotation(mu: f64, b: f64, m: u32, d_amp: f64, q_truncation: u32) -> Result<Self> {
        let s = JumpIntensitySpec {
            index: StableIndex::scaling_rotation(mu, b)?,
            amplitude: d_amp,
            rotation_mode_m: m,
            q_truncation,
        };
        s.validate()?;
        Ok(s)
    }

    /// The Gaussian intensity `exp(-k^2/2)` in one dimension.
    pub fn gaussian() -> Self {
        Self::pure_scaling(1, 2.0, -0.5).expect("valid constants")
    }

    pub fn validate(&self) -> Result<()> {
        self.index.validate()?;
        if !(self.amplitude < 0.0 && self.amplitude.is_finite()) {
            return Err(Error::invalid(
                "amplitude",
                format!("must be negative and finite, got {}", self.amplitude),
            ));
        }
        if self.rotation_mode_m == 0 {
            return Err(Error::invalid("rotation_mode_m", "must be a positive integer"));
        }
        if self.q_truncation == 0 {
            return Err(Error::invalid("q_truncation", "must be a positive integer"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.index.dim()
    }

    /// `d mu` for pure scaling, `2 mu` for rotation: the radial exponent.
    pub fn radial_exponent(&self) -> f64 {
        match self.index {
            StableIndex::PureScaling { d, mu } => d as f64 * mu,
            StableIndex::ScalingRotation { mu, .. } => 2.0 * mu,
        }
    }
}

/// Line orientation of `k` in `[0, pi)`, so that `k` and `-k` share it.
pub fn orientation(k: &[f64]) -> f64 {
    let (x, y) = if k[1] < 0.0 || (k[1] == 0.0 && k[0] < 0.0) {
        (-k[0], -k[1])
    } else {
        (k[0], k[1])
    };
    (y + 0.0).atan2(x)
}

/// Sum of `cos(2pi/(mu b) (m+1)^e / m * theta / ln|k|)` over the exponent
/// multiset `{e0} + 2 x {e0+1, ..., e0+Q}`, i.e. `e = |q| + e0`, `|q| <= Q`.
fn rotation_mode_sum(mu: f64, b: f64, m: u32, q: u32, e0: u32, theta: f64, ln_r: f64) -> f64 {
    let base = 2.0 * PI / (mu * b) / m as f64 * theta / ln_r;
    let growth = (m + 1) as f64;
    let mut factor = growth.powi(e0 as i32);
    let mut sum = (base * factor).cos();
    for _ in 1..=q {
        factor *= growth;
        sum += 2.0 * (base * factor).cos();
    }
    sum
}

/// `ln char_fn(spec, k)`.
pub fn log_char_fn(spec: &JumpIntensitySpec, k: &[f64]) -> Result<f64> {
    spec.validate()?;
    if k.len() != spec.dim() {
        return Err(Error::Contract(format!(
            "frequency of length {} does not match dimension {}",
            k.len(),
            spec.dim()
        )));
    }
    let r = k.iter().map(|x| x * x).sum::<f64>().sqrt();
    if r == 0.0 {
        return Ok(0.0);
    }
    match spec.index {
        StableIndex::PureScaling { .. } => Ok(spec.amplitude * r.powf(spec.radial_exponent())),
        StableIndex::ScalingRotation { mu, b } => {
            let ln_r = r.ln();
            if ln_r == 0.0 {
                return Err(Error::SingularArgument(
                    "|k| = 1 in the rotation class (ln|k| = 0)".into(),
                ));
            }
            let s = rotation_mode_sum(
                mu,
                b,
                spec.rotation_mode_m,
                spec.q_truncation,
                1,
                orientation(k),
                ln_r,
            );
            Ok(spec.amplitude * r.powf(2.0 * mu) * s)
        }
    }
}

/// Characteristic function of the jump intensity.
///
/// Bounded in `(0, 1]` for pure scaling. For the rotation class the mode sum
/// can be negative, so values above 1 are possible.
pub fn char_fn(spec: &JumpIntensitySpec, k: &[f64]) -> Result<f64> {
    log_char_fn(spec, k).map(f64::exp)
}

/// Pure-scaling intensity continued to a complex radial argument,
/// `exp(C z^{d mu})` on the principal branch.
pub fn char_fn_complex(spec: &JumpIntensitySpec, z: Complex64) -> Result<Complex64> {
    spec.validate()?;
    match spec.index {
        StableIndex::PureScaling { .. } => {
            if z == Complex64::new(0.0, 0.0) {
                return Ok(Complex64::new(1.0, 0.0));
            }
            Ok((z.powf(spec.radial_exponent()) * spec.amplitude).exp())
        }
        StableIndex::ScalingRotation { .. } => Err(Error::Unsupported(
            "complex continuation is defined for pure scaling only".into(),
        )),
    }
}

/// `|char_fn(k)^t - char_fn(t^{E^T} k)|`.
///
/// In the rotation class only `t = |k|^{2 mu m}` is admissible. The rotated
/// side is evaluated on the universal cover (angle `theta - b ln t`, not
/// folded) with the mode window shifted by one.
pub fn functional_equation_residual(spec: &JumpIntensitySpec, t: f64, k: &[f64]) -> Result<f64> {
    spec.validate()?;
    let kt = transpose_power_apply(t, &spec.index, k)?;
    match spec.index {
        StableIndex::PureScaling { .. } => {
            let lhs = char_fn(spec, k)?.powf(t);
            let rhs = char_fn(spec, &kt)?;
            Ok((lhs - rhs).abs())
        }
        StableIndex::ScalingRotation { mu, b } => {
            let m = spec.rotation_mode_m;
            let r = k.iter().map(|x| x * x).sum::<f64>().sqrt();
            let admissible = r.powf(2.0 * mu * m as f64);
            if r == 0.0 || (t / admissible - 1.0).abs() > 1e-12 {
                return Err(Error::Unsupported(format!(
                    "t = {t} is not |k|^(2 mu m) = {admissible}; only that family is solved"
                )));
            }
            let ln_r = r.ln();
            if ln_r == 0.0 {
                return Err(Error::SingularArgument("|k| = 1".into()));
            }
            let q = spec.q_truncation;
            let theta = orientation(k);
            let lhs = t * spec.amplitude
                * r.powf(2.0 * mu)
                * rotation_mode_sum(mu, b, m, q, 1, theta, ln_r);
            let rt = kt.iter().map(|x| x * x).sum::<f64>().sqrt();
            let theta_t = theta - b * t.ln();
            let ln_rt = ln_r + t.ln() / (2.0 * mu);
            let rhs = spec.amplitude
                * rt.powf(2.0 * mu)
                * rotation_mode_sum(mu, b, m, q, 2, theta_t, ln_rt);
            Ok((lhs.exp() - rhs.exp()).abs())
        }
    }
}

/// Truncated tail series of a symmetric stable density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    /// Envelope of the first omitted term.
    pub error_estimate: f64,
    pub terms_used: usize,
    /// Set when the terms started to grow before `n_terms` was reached.
    pub breakdown: bool,
}

/// `sin(pi x)` with exact zeros at the integers.
fn sin_pi(x: f64) -> f64 {
    let r = x.rem_euclid(2.0);
    if r == r.round() {
        0.0
    } else {
        (PI * r).sin()
    }
}

/// `p(x) ~ (1/pi) sum_n (-1)^{n+1} sin(pi mu n / 2) Gamma(mu n + 1)/n! x^{-mu n - 1}`
/// for the law with characteristic function `exp(-|k|^mu)`.
pub fn stable_density_series(x: f64, mu: f64, n_terms: usize) -> Result<SeriesValue> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("x must be positive, got {x}")));
    }
    if !(mu > 0.0 && mu <= 2.0) {
        return Err(Error::Domain(format!("mu must lie in (0, 2], got {mu}")));
    }
    if n_terms == 0 {
        return Err(Error::invalid("n_terms", "must be positive"));
    }
    let lx = x.ln();
    // log of Gamma(mu n + 1)/n! x^{-mu n - 1} / pi
    let log_env = |n: usize| {
        let nf = n as f64;
        ln_gamma(mu * nf + 1.0) - ln_gamma(nf + 1.0) - (mu * nf + 1.0) * lx - PI.ln()
    };
    let mut value = 0.0;
    let mut used = 0;
    let mut breakdown = false;
    let mut prev = f64::INFINITY;
    for n in 1..=n_terms {
        let le = log_env(n);
        if le > prev {
            breakdown = true;
            break;
        }
        prev = le;
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        value += sign * sin_pi(mu * n as f64 / 2.0) * le.exp();
        used = n;
    }
    Ok(SeriesValue {
        value,
        error_estimate: log_env(used + 1).exp(),
        terms_used: used,
        breakdown,
    })
}

/// Trapezoid points on `[0, K]` used by [`density_via_inversion`].
pub const INVERSION_POINTS: usize = 1 << 18;

/// Density of a one-dimensional pure-scaling law by cosine inversion of
/// `char_fn` on a uniform frequency grid.
pub fn density_via_inversion(spec: &JumpIntensitySpec, x_grid: &[f64]) -> Result<Vec<f64>> {
    density_via_inversion_with(spec, x_grid, INVERSION_POINTS)
}

pub fn density_via_inversion_with(
    spec: &JumpIntensitySpec,
    x_grid: &[f64],
    points: usize,
) -> Result<Vec<f64>> {
    spec.validate()?;
    let alpha = match spec.index {
        StableIndex::PureScaling { d: 1, mu } => mu,
        _ => {
            return Err(Error::Contract(
                "inversion needs a one-dimensional pure-scaling spec".into(),
            ))
        }
    };
    let n = x_grid.len();
    for i in 0..n {
        let mirror = x_grid[n - 1 - i];
        if (x_grid[i] + mirror).abs() > 1e-12 * (1.0 + x_grid[i].abs()) {
            return Err(Error::Contract("x grid must be symmetric about 0".into()));
        }
    }
    // |char_fn(K)| = 1e-16
    let k_max = ((1e-16f64).ln() / spec.amplitude).powf(1.0 / alpha);
    let h = k_max / points as f64;
    let phi: Vec<f64> = (0..=points)
        .map(|j| (spec.amplitude * (j as f64 * h).powf(alpha)).exp())
        .collect();
    let out = x_grid
        .par_iter()
        .map(|&x| {
            // cos(k_j x) by a rotation recurrence, resynchronised in blocks.
            let step = Complex64::from_polar(1.0, h * x);
            let mut acc = 0.5 * phi[0] + 0.5 * phi[points] * (k_max * x).cos();
            let mut rot = Complex64::new(1.0, 0.0);
            for (j, &p) in phi.iter().enumerate().take(points).skip(1) {
                if j % 512 == 0 {
                    rot = Complex64::from_polar(1.0, j as f64 * h * x);
                } else {
                    rot *= step;
                }
                acc += p * rot.re;
            }
            acc * h / PI
        })
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rotation_spec() -> JumpIntensitySpec {
        JumpIntensitySpec::rotation(0.7, 1.3, 1, -0.8, 20).unwrap()
    }

    #[test]
    fn zero_frequency_is_one() {
        assert_eq!(char_fn(&JumpIntensitySpec::gaussian(), &[0.0]).unwrap(), 1.0);
        assert_eq!(char_fn(&rotation_spec(), &[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn gaussian_case() {
        let s = JumpIntensitySpec::gaussian();
        for k in [-3.0, -0.4, 0.5, 2.0] {
            let v = char_fn(&s, &[k]).unwrap();
            assert!((v - (-k * k / 2.0f64).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn substitution_value() {
        let s = JumpIntensitySpec::pure_scaling(1, 1.5, -1.0).unwrap();
        let v = char_fn(&s, &[2.0]).unwrap();
        assert!((v - (-(2f64.powf(1.5))).exp()).abs() < 1e-15);
    }

    #[test]
    fn rotation_unit_circle_is_singular() {
        let r = char_fn(&rotation_spec(), &[0.6, 0.8]);
        assert!(matches!(r, Err(Error::SingularArgument(_))));
    }

    #[test]
    fn amplitude_must_be_negative() {
        assert!(JumpIntensitySpec::pure_scaling(1, 1.0, 0.5).is_err());
        assert!(JumpIntensitySpec::pure_scaling(1, 1.0, 0.0).is_err());
    }

    #[test]
    fn residual_trivial_and_pure() {
        let s = JumpIntensitySpec::pure_scaling(2, 0.8, -1.2).unwrap();
        assert_eq!(functional_equation_residual(&s, 1.0, &[0.3, 0.4]).unwrap(), 0.0);
        assert!(functional_equation_residual(&s, 3.7, &[0.9, -1.7]).unwrap() <= 1e-12);
    }

    #[test]
    fn residual_rotation_family() {
        let s = rotation_spec();
        let k = [0.5 * 0.3f64.cos(), 0.5 * 0.3f64.sin()];
        let t = 0.5f64.powf(2.0 * 0.7);
        let res = functional_equation_residual(&s, t, &k).unwrap();
        assert!(res <= 1e-9, "{res}");
        assert!(matches!(
            functional_equation_residual(&s, 2.0, &k),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn cauchy_tail_first_term() {
        let v = stable_density_series(10.0, 1.0, 1).unwrap();
        assert!((v.value - 1.0 / (100.0 * PI)).abs() < 1e-18);
        assert!(!v.breakdown);
    }

    #[test]
    fn cauchy_tail_full() {
        let v = stable_density_series(10.0, 1.0, 10).unwrap();
        let exact = 1.0 / (PI * 101.0);
        assert!((v.value / exact - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gaussian_limit_has_no_tail() {
        for x in [2.0, 5.0, 30.0] {
            assert_eq!(stable_density_series(x, 2.0, 8).unwrap().value, 0.0);
        }
    }

    #[test]
    fn series_flags_breakdown() {
        let v = stable_density_series(0.5, 1.5, 40).unwrap();
        assert!(v.breakdown);
        assert!(v.terms_used < 40);
    }

    #[test]
    fn inversion_cauchy_at_zero() {
        let s = JumpIntensitySpec::pure_scaling(1, 1.0, -1.0).unwrap();
        let p = density_via_inversion(&s, &[0.0]).unwrap();
        assert!((p[0] - 1.0 / PI).abs() < 1e-9);
    }

    #[test]
    fn inversion_needs_symmetric_grid() {
        let s = JumpIntensitySpec::gaussian();
        assert!(matches!(
            density_via_inversion(&s, &[0.0, 1.0]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn inversion_normalised_and_nonnegative() {
        let s = JumpIntensitySpec::pure_scaling(1, 1.5, -1.0).unwrap();
        let h = 0.05;
        let xs: Vec<f64> = (-2000..=2000).map(|i| i as f64 * h).collect();
        let p = density_via_inversion_with(&s, &xs, 1 << 15).unwrap();
        assert!(p.iter().all(|&v| v >= -1e-8));
        // Mass beyond |x| = 100 from the leading tail term.
        let tail = 2.0 * stable_density_series(100.0, 1.5, 1).unwrap().value * 100.0 / 1.5;
        let mass: f64 = p.iter().sum::<f64>() * h + tail;
        assert!((mass - 1.0).abs() < 1e-4, "{mass}");
    }

    proptest! {
        #[test]
        fn even_in_k(k in prop::collection::vec(-4.0f64..4.0, 2)) {
            let s = rotation_spec();
            let neg = [-k[0], -k[1]];
            let a = char_fn(&s, &k);
            let b = char_fn(&s, &neg);
            match (a, b) {
                (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false),
            }
            let p = JumpIntensitySpec::pure_scaling(2, 0.9, -0.7).unwrap();
            prop_assert_eq!(char_fn(&p, &k).unwrap(), char_fn(&p, &neg).unwrap());
        }

        #[test]
        fn pure_scaling_bounded(k in prop::collection::vec(-50.0f64..50.0, 3), mu in 0.05f64..0.66) {
            let s = JumpIntensitySpec::pure_scaling(3, mu, -1.0).unwrap();
            let l = log_char_fn(&s, &k).unwrap();
            let v = char_fn(&s, &k).unwrap();
            prop_assert!(l <= 0.0 && l.is_finite());
            prop_assert!((0.0..=1.0).contains(&v));
        }

        #[test]
        fn rotation_bounded(k in prop::collection::vec(-4.0f64..4.0, 2)) {
            let s = rotation_spec();
            if let Ok(l) = log_char_fn(&s, &k) {
                let r = (k[0] * k[0] + k[1] * k[1]).sqrt();
                let bound = 0.8 * r.powf(1.4) * (2.0 * 20.0 + 1.0);
                prop_assert!(l.is_finite() && l.abs() <= bound * (1.0 + 1e-12));
            }
        }

        #[test]
        fn auto_convolution(t in 0.05f64..20.0, k in -5.0f64..5.0, mu in 0.1f64..2.0) {
            let s = JumpIntensitySpec::pure_scaling(1, mu, -0.9).unwrap();
            let lhs = char_fn(&s, &[k]).unwrap().powf(t);
            let rhs = char_fn(&s, &[t.powf(1.0 / mu) * k]).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12);
        }
    }
}
