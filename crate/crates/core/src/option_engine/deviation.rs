//! The portfolio deviation `D_t` and its conditional characteristic function.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::tail::{n_fun_delta, TailLaw};
use crate::error::{Error, Result};
use crate::jump_intensity::{char_fn_complex, JumpIntensitySpec};
use crate::operator_algebra::StableIndex;
use crate::quadrature::{integrate_panels, integrate_real, Tolerance};

/// Value and S-derivatives of the option surface at one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceJet {
    pub spot: f64,
    pub value: f64,
    pub dc_dt: f64,
    /// `derivs[n - 1]` is `d^n C / dS^n`.
    pub derivs: Vec<f64>,
}

impl SurfaceJet {
    /// `D_t = dC/dt + r S dC/dS - r C`.
    pub fn drift(&self, r: f64) -> f64 {
        self.dc_dt + r * self.spot * self.derivs.first().copied().unwrap_or(0.0) - r * self.value
    }

    /// `c_n = (1/n!) d^n C/dS^n S^n` for `n = 2..=n_max`.
    pub fn taylor_coeffs(&self) -> Vec<f64> {
        let mut fact = 1.0;
        let mut out = Vec::new();
        for (i, d) in self.derivs.iter().enumerate() {
            let n = i + 1;
            fact *= n as f64;
            if n >= 2 {
                out.push(d * self.spot.powi(n as i32) / fact);
            }
        }
        out
    }

    pub fn tail_law(&self) -> TailLaw {
        TailLaw::Series {
            coeffs: self.taylor_coeffs(),
        }
    }
}

/// `D_t (dt)^beta + sum_{n>=2} (1/n!) C^(n) S^n (e^z - 1)^n` for a step with
/// `z = sigma . dL`.
pub fn deviation_sample(jet: &SurfaceJet, r: f64, delta_t: f64, beta: f64, z: f64) -> f64 {
    let x = z.exp_m1();
    let p: f64 = jet
        .taylor_coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| c * x.powi(i as i32 + 2))
        .sum();
    jet.drift(r) * delta_t.powf(beta) + p
}

pub const SMALL_K_THRESHOLD: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviationQuery {
    pub k: f64,
    pub delta_t: f64,
    pub beta: f64,
    pub spec: JumpIntensitySpec,
    pub sigma: Vec<f64>,
    /// `D_t`.
    pub drift: f64,
    pub tail: TailLaw,
    pub epsilon: f64,
    pub frak_m: f64,
}

impl DeviationQuery {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.tail.validate()?;
        if !(self.delta_t > 0.0) {
            return Err(Error::invalid("delta_t", "must be positive"));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::invalid("beta", "must lie in (0, 1]"));
        }
        if self.sigma.len() != self.spec.dim() || self.sigma.iter().all(|s| *s == 0.0) {
            return Err(Error::invalid("sigma", "must be nonzero with the jump dimension"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid("epsilon", "must be positive"));
        }
        if !(self.frak_m > 0.0) {
            return Err(Error::invalid("frak_m", "must be positive"));
        }
        Ok(())
    }

    fn scale(&self) -> f64 {
        self.delta_t.powf(self.beta * self.spec.index.scale_exponent())
    }

    fn with_k(&self, k: f64) -> Self {
        DeviationQuery { k, ..self.clone() }
    }
}

/// Small-k branch below `SMALL_K_THRESHOLD`, z-domain quadrature above.
pub fn deviation_char(q: &DeviationQuery) -> Result<Complex64> {
    if q.k.abs() <= SMALL_K_THRESHOLD {
        deviation_char_small_k(q)
    } else {
        Ok(deviation_char_quadrature(q)?.value)
    }
}

/// `exp(ik D_t dt^beta) w(dt^{beta E^T} lambda*)` with `w(z) = exp(C z^{d mu})`
/// on the principal branch, for `k > 0`; negative `k` by conjugation.
pub fn deviation_char_small_k(q: &DeviationQuery) -> Result<Complex64> {
    q.validate()?;
    if let StableIndex::ScalingRotation { .. } = q.spec.index {
        return Err(Error::Unsupported(
            "complex continuation is defined for pure scaling only".into(),
        ));
    }
    if q.k == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    if q.k < 0.0 {
        return Ok(deviation_char_small_k(&q.with_k(-q.k))?.conj());
    }
    let lambda = n_fun_delta(q.k, &q.tail, q.epsilon, q.frak_m)?.lambda_star;
    let w = char_fn_complex(&q.spec, lambda * q.scale())?;
    let drift = Complex64::new(0.0, q.k * q.drift * q.delta_t.powf(q.beta)).exp();
    Ok(drift * w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationValue {
    pub value: Complex64,
    /// Probability mass outside the integration window.
    pub truncated_mass: f64,
}

/// Symmetric density with characteristic function `exp(C |s lambda|^a)`.
fn stable_density(a: f64, amp: f64, s: f64, z: f64) -> Result<f64> {
    let scale = amp.abs().powf(1.0 / a) * s;
    let u = z / scale;
    if a == 2.0 {
        return Ok((-u * u / 4.0).exp() / (2.0 * PI.sqrt() * scale));
    }
    let cut = 40f64.powf(1.0 / a);
    let v = integrate_real(
        |l| (l * u).cos() * (-l.powf(a)).exp(),
        0.0,
        cut,
        Tolerance::new(1e-14, 1e-11),
    )?;
    Ok(v / (PI * scale))
}

/// Tail mass `P(|Z| > z)` bound from the leading power tail.
fn tail_mass(a: f64, amp: f64, s: f64, z: f64) -> f64 {
    let scale = amp.abs().powf(1.0 / a) * s;
    let u = z / scale;
    if a == 2.0 {
        return statrs::function::erf::erfc(u / 2.0);
    }
    let g = statrs::function::gamma::gamma(a) * (PI * a / 2.0).sin() / PI;
    (2.0 * g / a * u.powf(-a)).min(1.0)
}

/// `exp(ik D_t dt^beta) int nu(z) exp(ik P(e^z - 1)) dz`, `nu` the density with
/// characteristic function `w(dt^{beta E^T} lambda)`. The window stops where
/// `|k P|` passes `1e6` radians or the tail mass drops below `1e-9`.
pub fn deviation_char_quadrature(q: &DeviationQuery) -> Result<DeviationValue> {
    q.validate()?;
    let (a, d) = match q.spec.index {
        StableIndex::PureScaling { d, mu } => (d as f64 * mu, d),
        StableIndex::ScalingRotation { .. } => {
            return Err(Error::Unsupported(
                "the deviation density is defined for pure scaling only".into(),
            ))
        }
    };
    if d != 1 {
        return Err(Error::Unsupported("z-domain branch needs d = 1".into()));
    }
    if q.k == 0.0 {
        return Ok(DeviationValue {
            value: Complex64::new(1.0, 0.0),
            truncated_mass: 0.0,
        });
    }
    let amp = q.spec.amplitude;
    let s = q.scale();
    let width = amp.abs().powf(1.0 / a) * s;
    let mut z_hi = width;
    while tail_mass(a, amp, s, z_hi) > 1e-9 && z_hi < 1e4 * width {
        z_hi *= 1.25;
    }
    let phase = |z: f64| (q.k * q.tail.eval_exp_minus_one(Complex64::new(z, 0.0)).re).abs();
    let mut z_up = z_hi;
    if phase(z_up) > 1e6 || !phase(z_up).is_finite() {
        let (mut lo, mut hi) = (0.0, z_up);
        for _ in 0..100 {
            let m = 0.5 * (lo + hi);
            if phase(m) > 1e6 || !phase(m).is_finite() {
                hi = m;
            } else {
                lo = m;
            }
        }
        z_up = lo;
    }
    let z_lo = -z_hi;
    let truncated_mass = 0.5 * tail_mass(a, amp, s, z_hi) + 0.5 * tail_mass(a, amp, s, z_up);
    let n_panels = 64;
    let breaks: Vec<f64> = (0..=n_panels)
        .map(|i| z_lo + (z_up - z_lo) * i as f64 / n_panels as f64)
        .collect();
    let ik = Complex64::new(0.0, q.k);
    let density_err = std::cell::RefCell::new(None);
    let est = integrate_panels(
        |z| match stable_density(a, amp, s, z) {
            Ok(f) => (ik * q.tail.eval_exp_minus_one(Complex64::new(z, 0.0))).exp() * f,
            Err(e) => {
                density_err.borrow_mut().get_or_insert(e);
                Complex64::new(0.0, 0.0)
            }
        },
        &breaks,
        Tolerance::new(1e-11, 1e-9).with_max_intervals(40000),
    );
    if let Some(e) = density_err.into_inner() {
        return Err(e);
    }
    let drift = Complex64::new(0.0, q.k * q.drift * q.delta_t.powf(q.beta)).exp();
    Ok(DeviationValue {
        value: drift * est.require()?,
        truncated_mass,
    })
}

/// One-sided finite-difference derivative of `deviation_char_small_k` at 0.
pub fn drift_derivative(q: &DeviationQuery, step: f64) -> Result<Complex64> {
    let up = deviation_char_small_k(&q.with_k(step))?;
    Ok((up - 1.0) / step)
}
