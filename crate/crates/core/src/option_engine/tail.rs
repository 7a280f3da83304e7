//! The tail law `P`, its inverse branches, the concentration point of
//! `N(k, .)` and the kernel `M(k, lambda)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_panels, Tolerance};

/// `P(x)` with `P(0) = 0` and `P(inf) = inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TailLaw {
    /// `coeff * x^degree`.
    Power { coeff: f64, degree: u32 },
    /// `T sgn(x) ln(1 + |x|)^alpha`, which behaves as `T (ln x)^alpha` for
    /// large `x`. Its inverse is taken from the tail form.
    LogTail { frak_t: f64, tail_alpha: f64 },
    /// `sum_n c_n x^n`, `coeffs[0]` multiplying `x^2`.
    Series { coeffs: Vec<f64> },
}

impl TailLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            TailLaw::Power { coeff, degree } => {
                if !(*coeff > 0.0) || !coeff.is_finite() {
                    return Err(Error::invalid("coeff", "must be positive and finite"));
                }
                if *degree < 2 {
                    return Err(Error::invalid("degree", "must be at least 2"));
                }
            }
            TailLaw::LogTail { frak_t, tail_alpha } => {
                if !(*frak_t > 0.0) || !frak_t.is_finite() {
                    return Err(Error::invalid("frak_t", "must be positive and finite"));
                }
                if !(*tail_alpha > 0.0) || !tail_alpha.is_finite() {
                    return Err(Error::invalid("tail_alpha", "must be positive"));
                }
            }
            TailLaw::Series { coeffs } => {
                if coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::invalid("coeffs", "must be finite"));
                }
                match coeffs.iter().rposition(|c| *c != 0.0) {
                    Some(i) if coeffs[i] > 0.0 => {}
                    _ => {
                        return Err(Error::invalid(
                            "coeffs",
                            "leading coefficient must be positive so that P(inf) = inf",
                        ))
                    }
                }
            }
        }
        Ok(())
    }

    /// Checks `0 < tail_alpha < mu` for the log-tail class.
    pub fn validate_against(&self, mu: f64) -> Result<()> {
        self.validate()?;
        if let TailLaw::LogTail { tail_alpha, .. } = self {
            if *tail_alpha >= mu {
                return Err(Error::invalid(
                    "tail_alpha",
                    format!("must lie in (0, mu) = (0, {mu})"),
                ));
            }
        }
        Ok(())
    }

    fn series(&self) -> Vec<(i32, f64)> {
        match self {
            TailLaw::Power { coeff, degree } => vec![(*degree as i32, *coeff)],
            TailLaw::Series { coeffs } => coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0.0)
                .map(|(i, c)| (i as i32 + 2, *c))
                .collect(),
            TailLaw::LogTail { .. } => Vec::new(),
        }
    }

    fn degree(&self) -> i32 {
        self.series().last().map(|p| p.0).unwrap_or(0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TailLaw::LogTail { frak_t, tail_alpha } => {
                frak_t * x.signum() * x.abs().ln_1p().powf(*tail_alpha)
            }
            _ => self.series().iter().map(|(n, c)| c * x.powi(*n)).sum(),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            TailLaw::LogTail { frak_t, tail_alpha } => {
                if x == 0.0 {
                    return if *tail_alpha < 1.0 { f64::INFINITY } else { 0.0 };
                }
                frak_t * tail_alpha * x.abs().ln_1p().powf(tail_alpha - 1.0) / (1.0 + x.abs())
            }
            _ => self
                .series()
                .iter()
                .map(|(n, c)| c * *n as f64 * x.powi(n - 1))
                .sum(),
        }
    }

    /// `P''(0)` where it is finite.
    pub fn second_derivative_at_zero(&self) -> Option<f64> {
        match self {
            TailLaw::LogTail { .. } => None,
            _ => Some(
                self.series()
                    .iter()
                    .find(|(n, _)| *n == 2)
                    .map(|(_, c)| 2.0 * c)
                    .unwrap_or(0.0),
            ),
        }
    }

    /// `P(e^z - 1)` continued to complex `z` with `Re z > 0`.
    pub fn eval_exp_minus_one(&self, z: Complex64) -> Complex64 {
        match self {
            TailLaw::LogTail { frak_t, tail_alpha } => {
                if z.im == 0.0 && z.re < 0.0 {
                    Complex64::new(self.eval(z.re.exp_m1()), 0.0)
                } else {
                    z.powf(*tail_alpha) * frak_t
                }
            }
            _ => {
                let x = if z.im == 0.0 {
                    Complex64::new(z.re.exp_m1(), 0.0)
                } else {
                    z.exp() - 1.0
                };
                self.series().iter().map(|(n, c)| x.powi(*n) * c).sum()
            }
        }
    }

    /// All roots of `P(x) = y` for the polynomial classes.
    fn roots(&self, y: Complex64) -> Result<Vec<Complex64>> {
        let terms = self.series();
        let p = self.degree() as usize;
        let lead = terms.last().map(|t| t.1).unwrap_or(0.0);
        let mut coeff = vec![Complex64::new(0.0, 0.0); p + 1];
        for (n, c) in &terms {
            coeff[*n as usize] = Complex64::new(*c, 0.0);
        }
        coeff[0] -= y;
        let mut companion = nalgebra::DMatrix::<Complex64>::zeros(p, p);
        for i in 1..p {
            companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
        }
        for i in 0..p {
            companion[(i, p - 1)] = -coeff[i] / lead;
        }
        let eig = companion
            .eigenvalues()
            .ok_or_else(|| Error::Quadrature("companion eigenvalues did not converge".into()))?;
        // one Newton polish per root
        Ok(eig
            .iter()
            .map(|&x0| {
                let mut x = x0;
                for _ in 0..3 {
                    let mut f = -y;
                    let mut df = Complex64::new(0.0, 0.0);
                    for (n, c) in &terms {
                        f += x.powi(*n) * c;
                        df += x.powi(n - 1) * (*n as f64 * c);
                    }
                    if df.norm() == 0.0 {
                        break;
                    }
                    x -= f / df;
                }
                x
            })
            .collect())
    }

    /// The inverse branch continuing `P^{-1}` from `0+`.
    pub fn inverse(&self, y: Complex64) -> Result<Complex64> {
        self.validate()?;
        match self {
            TailLaw::LogTail { .. } => Ok(self.inverse_log(y)?.exp()),
            TailLaw::Power { coeff, degree } => Ok((y / coeff).powf(1.0 / *degree as f64)),
            TailLaw::Series { .. } => {
                let p = self.degree();
                let lead = self.series().last().unwrap().1;
                let guide = (y / lead).powf(1.0 / p as f64);
                let mut roots = self.roots(y)?;
                roots.sort_by(|a, b| (a - guide).norm().total_cmp(&(b - guide).norm()));
                if roots.len() > 1 {
                    let d0 = (roots[0] - guide).norm();
                    let d1 = (roots[1] - guide).norm();
                    if d1 - d0 <= 1e-9 * d1.max(1e-300) {
                        return Err(Error::BranchSelection {
                            argument: format!("{y}"),
                            candidates: roots.iter().map(|r| format!("{r}")).collect(),
                        });
                    }
                }
                Ok(roots[0])
            }
        }
    }

    /// `ln P^{-1}(y)` without forming `P^{-1}(y)`.
    pub fn inverse_log(&self, y: Complex64) -> Result<Complex64> {
        match self {
            TailLaw::LogTail {
                frak_t, tail_alpha, ..
            } => {
                self.validate()?;
                Ok((y / frak_t).powf(1.0 / tail_alpha))
            }
            TailLaw::Power { coeff, degree } => {
                self.validate()?;
                Ok((y / coeff).ln() / *degree as f64)
            }
            TailLaw::Series { .. } => Ok(self.inverse(y)?.ln()),
        }
    }

    /// `P^{-1}(y) / (P^{-1})'(y)`.
    pub fn inverse_ratio(&self, y: Complex64) -> Result<Complex64> {
        match self {
            TailLaw::LogTail { frak_t, tail_alpha } => {
                self.validate()?;
                Ok((y / frak_t).powf(1.0 - 1.0 / tail_alpha) * (tail_alpha * frak_t))
            }
            TailLaw::Power { degree, .. } => {
                self.validate()?;
                Ok(y * *degree as f64)
            }
            TailLaw::Series { .. } => {
                let x = self.inverse(y)?;
                let dp: Complex64 = self
                    .series()
                    .iter()
                    .map(|(n, c)| x.powi(n - 1) * (*n as f64 * c))
                    .sum();
                Ok(x * dp)
            }
        }
    }

    /// Points where `P(e^z - 1)` changes monotonicity.
    pub fn monotone_breakpoints(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let g = |z: f64| self.derivative(z.exp_m1()) * z.exp();
        let (lo, hi, n) = (-40.0, 40.0, 8000);
        let h = (hi - lo) / n as f64;
        let mut out = Vec::new();
        let mut prev = g(lo);
        for i in 1..=n {
            let z = lo + i as f64 * h;
            let cur = g(z);
            if prev.signum() != cur.signum() && prev != 0.0 && cur != 0.0 {
                let (mut a, mut b) = (z - h, z);
                for _ in 0..80 {
                    let m = 0.5 * (a + b);
                    if g(m).signum() == g(a).signum() {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                out.push(0.5 * (a + b));
            }
            if cur != 0.0 {
                prev = cur;
            }
        }
        if !(prev > 0.0) {
            return Err(Error::Domain(
                "branch decomposition failed: P(e^z - 1) is not increasing for large z".into(),
            ));
        }
        Ok(out)
    }
}

/// Solves `theta exp(-1/m) = 1/2` for `m`.
pub fn solve_frak_m(theta: u32) -> Result<f64> {
    if theta == 0 {
        return Err(Error::Domain("theta must count at least one interval".into()));
    }
    let f = |m: f64| theta as f64 * (-1.0 / m).exp() - 0.5;
    let (mut a, mut b) = (1e-3, 1e3);
    if f(a) > 0.0 {
        a = 1e-300;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if f(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
        if b - a <= f64::EPSILON * b {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaLimit {
    /// `-i m^{-1} / ln P^{-1}(i eps / k)`.
    pub lambda_star: Complex64,
    /// Residual mass against a unit Gaussian probe.
    pub frak_f: f64,
}

/// Concentration point of `N(k, .)` and the residual mass `F_k`.
pub fn n_fun_delta(k: f64, tail: &TailLaw, epsilon: f64, frak_m: f64) -> Result<DeltaLimit> {
    if k == 0.0 {
        return Err(Error::Distributional("N(0, .) is a delta at 0".into()));
    }
    if !(epsilon > 0.0) || !(frak_m > 0.0) {
        return Err(Error::invalid("epsilon", "epsilon and frak_m must be positive"));
    }
    let y = Complex64::new(0.0, epsilon / k);
    let log_inv = tail.inverse_log(y)?;
    let lambda_star = Complex64::new(0.0, -1.0 / frak_m) / log_inv;
    Ok(DeltaLimit {
        lambda_star,
        frak_f: residual_mass(k, tail)?,
    })
}

/// `|int (e^{ik P(e^z - 1)} - 1) phi(z) dz|`, `phi` the unit normal density.
pub fn residual_mass(k: f64, tail: &TailLaw) -> Result<f64> {
    tail.validate()?;
    let norm = 1.0 / (2.0 * PI).sqrt();
    let f = |z: f64| {
        let p = tail.eval_exp_minus_one(Complex64::new(z, 0.0));
        ((p * Complex64::new(0.0, k)).exp() - 1.0) * (norm * (-0.5 * z * z).exp())
    };
    let tol = Tolerance::new(1e-12, 1e-10).with_max_intervals(20000);
    let breaks: Vec<f64> = (-9..=9).map(|i| i as f64).collect();
    Ok(integrate_panels(f, &breaks, tol).require()?.norm())
}

/// `M(k, lambda)` smoothed by a Gaussian of width `h` in `z`:
/// `(1/2pi) int exp(ik P(e^z - 1)) exp(-i lambda z) exp(-h^2 z^2 / 2) dz`.
///
/// The unbounded monotone piece beyond the last breakpoint runs on the
/// line `Im z = phi`, where `e^{ik P}` decays.
pub fn m_kernel(k: f64, lambda: f64, tail: &TailLaw, h: f64) -> Result<Complex64> {
    if k == 0.0 {
        return Err(Error::Distributional("M(0, lambda) = delta(lambda)".into()));
    }
    if !(h > 0.0) {
        return Err(Error::Distributional(
            "M(k, .) needs a positive smoothing width".into(),
        ));
    }
    let breaks = tail.monotone_breakpoints()?;
    let z0 = breaks.iter().copied().fold(0.0, f64::max) + 1.0;
    let phi = match tail {
        TailLaw::LogTail { .. } => 0.5,
        _ => PI / (4.0 * tail.degree() as f64),
    } * k.signum();
    let reach = 9.0 / h;
    let ik = Complex64::new(0.0, k);
    let f = |z: Complex64| {
        (ik * tail.eval_exp_minus_one(z) - Complex64::new(0.0, lambda) * z - 0.5 * h * h * z * z)
            .exp()
    };
    let tol = Tolerance::new(1e-13, 1e-10).with_max_intervals(20000);

    let mut left_breaks = vec![-reach.max(z0 + 1.0)];
    left_breaks.extend(breaks.iter().copied().filter(|b| *b > -reach && *b < z0));
    left_breaks.push(z0);
    let left = integrate_panels(|x| f(Complex64::new(x, 0.0)), &left_breaks, tol).require()?;

    let up = integrate(
        |s| f(Complex64::new(z0, s * phi)) * Complex64::new(0.0, phi),
        0.0,
        1.0,
        tol,
    )
    .require()?;

    let right_end = z0.max(reach) + 1.0;
    let right_breaks: Vec<f64> = (0..=16)
        .map(|i| z0 + (right_end - z0) * i as f64 / 16.0)
        .collect();
    let right = integrate_panels(|x| f(Complex64::new(x, phi)), &right_breaks, tol).require()?;

    Ok((left + up + right) / (2.0 * PI))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frak_m_theta_one() {
        let m = solve_frak_m(1).unwrap();
        assert!((m - 1.0 / 2f64.ln()).abs() <= 1e-12);
        let m2 = solve_frak_m(3).unwrap();
        assert!((m2 - 1.0 / 6f64.ln()).abs() <= 1e-12);
        assert!(solve_frak_m(0).is_err());
    }

    #[test]
    fn quadratic_inverse_closed_form() {
        let p = TailLaw::Power { coeff: 1.0, degree: 2 };
        for k in [1e-2, 1e-4] {
            let y = Complex64::new(0.0, 1e-2 / k);
            let inv = p.inverse(y).unwrap();
            assert!((inv * inv - y).norm() < 1e-12 * y.norm());
            let d = n_fun_delta(k, &p, 1e-2, 1.0).unwrap();
            let want = Complex64::new(0.0, -1.0) / (0.5 * y.ln());
            assert!((d.lambda_star - want).norm() < 1e-14);
        }
        let r = p.inverse_ratio(Complex64::new(0.0, 3.0)).unwrap();
        assert_eq!(r, Complex64::new(0.0, 6.0));
        assert_eq!(p.second_derivative_at_zero(), Some(2.0));
    }

    #[test]
    fn series_inverse_matches_power() {
        let s = TailLaw::Series { coeffs: vec![1.0] };
        let p = TailLaw::Power { coeff: 1.0, degree: 2 };
        let y = Complex64::new(0.0, 100.0);
        assert!((s.inverse(y).unwrap() - p.inverse(y).unwrap()).norm() < 1e-10);
        let s3 = TailLaw::Series { coeffs: vec![0.5, 0.0, 0.2] };
        let x = s3.inverse(Complex64::new(3.0, 0.0)).unwrap();
        assert!(x.im.abs() < 1e-12 && x.re > 0.0);
        assert!((s3.eval(x.re) - 3.0).abs() < 1e-10);
    }

    #[test]
    fn log_tail_lambda_star() {
        let (t, a, eps, m) = (2.0, 0.75, 1e-2, 1.0 / 2f64.ln());
        let tail = TailLaw::LogTail { frak_t: t, tail_alpha: a };
        let k = 1e-3;
        let got = n_fun_delta(k, &tail, eps, m).unwrap().lambda_star;
        let want = Complex64::new(0.0, -1.0 / m)
            * (Complex64::new(k * t, 0.0) / Complex64::new(0.0, eps)).powf(1.0 / a);
        assert!((got - want).norm() < 1e-14 * want.norm());
        let smaller = n_fun_delta(k / 100.0, &tail, eps, m).unwrap().lambda_star;
        assert!(smaller.norm() < got.norm());
    }

    #[test]
    fn residual_mass_decreases() {
        let p = TailLaw::Power { coeff: 1.0, degree: 2 };
        let mut prev = f64::INFINITY;
        for j in 4..=16 {
            let f = residual_mass(2f64.powi(-j), &p).unwrap();
            assert!(f < prev);
            prev = f;
        }
        assert!(prev < 1e-3);
        // small-k slope is E[(e^Z - 1)^2] = e^2 - 2 e^{1/2} + 1
        let slope = (1f64).exp().powi(2) - 2.0 * 0.5f64.exp() + 1.0;
        let k = 2f64.powi(-16);
        assert!((residual_mass(k, &p).unwrap() / k - slope).abs() < 1e-2 * slope);
    }

    #[test]
    fn breakpoints() {
        let p = TailLaw::Power { coeff: 1.0, degree: 2 };
        let b = p.monotone_breakpoints().unwrap();
        assert_eq!(b.len(), 1);
        assert!(b[0].abs() < 1e-12);
        let odd = TailLaw::Power { coeff: 1.0, degree: 3 };
        assert!(odd.monotone_breakpoints().unwrap().is_empty());
    }

    #[test]
    fn m_kernel_matches_direct_damped_quadrature() {
        let p = TailLaw::Power { coeff: 1.0, degree: 2 };
        let h = 1.0;
        for (k, lambda) in [(0.01, 0.0), (0.01, 1.5), (-0.05, -0.7), (0.2, 3.0)] {
            let direct = integrate_panels(
                |z| {
                    let q = (z.exp_m1()).powi(2);
                    Complex64::new(0.0, k * q - lambda * z).exp() * (-0.5 * h * h * z * z).exp()
                },
                &(-10..=10).map(|i| i as f64).collect::<Vec<_>>(),
                Tolerance::new(1e-12, 1e-10).with_max_intervals(50000),
            )
            .require()
            .unwrap()
                / (2.0 * PI);
            let got = m_kernel(k, lambda, &p, h).unwrap();
            assert!((got - direct).norm() < 1e-3, "{k} {lambda}: {got} {direct}");
        }
    }

    #[test]
    fn m_kernel_unit_mass() {
        // int M_h(k, lambda) d lambda = e^{ik P(0)} = 1; k and h keep M_h inside the window
        let p = TailLaw::Power { coeff: 1.0, degree: 2 };
        let h = 2.0;
        let dl = 0.05;
        let mass: Complex64 = (-800..=800)
            .map(|i| m_kernel(0.01, i as f64 * dl, &p, h).unwrap() * dl)
            .sum();
        assert!((mass - 1.0).norm() < 1e-6, "{mass}");
    }

    #[test]
    fn m_kernel_degenerate_k() {
        let p = TailLaw::Power { coeff: 1.0, degree: 2 };
        assert!(matches!(m_kernel(0.0, 1.0, &p, 1.0), Err(Error::Distributional(_))));
    }

    #[test]
    fn rejects_bad_tail_exponent() {
        let t = TailLaw::LogTail { frak_t: 1.0, tail_alpha: 2.0 };
        assert!(t.validate().is_ok());
        assert!(t.validate_against(1.5).is_err());
    }
}
