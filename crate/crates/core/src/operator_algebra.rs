//! Scaling operators `t^E` for the two solvable Jordan classes of the
//! stable index.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Matrix exponent `E` of an operator-stable law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StableIndex {
    /// `E = (d mu)^-1 I` on `R^d`.
    PureScaling { d: usize, mu: f64 },
    /// 2x2 block with diagonal `(2 mu)^-1` and off-diagonal `-b`, `+b`.
    ScalingRotation { mu: f64, b: f64 },
}

impl StableIndex {
    pub fn pure_scaling(d: usize, mu: f64) -> Result<Self> {
        let e = StableIndex::PureScaling { d, mu };
        e.validate()?;
        Ok(e)
    }

    pub fn scaling_rotation(mu: f64, b: f64) -> Result<Self> {
        let e = StableIndex::ScalingRotation { mu, b };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StableIndex::PureScaling { d, mu } => {
                if d == 0 {
                    return Err(Error::invalid("d", "dimension must be at least 1"));
                }
                if !(mu > 0.0 && mu.is_finite()) {
                    return Err(Error::invalid("mu", format!("must be positive, got {mu}")));
                }
                if d as f64 * mu > 2.0 {
                    return Err(Error::invalid(
                        "mu",
                        format!("d*mu = {} exceeds 2 (eigenvalue real part below 1/2)", d as f64 * mu),
                    ));
                }
            }
            StableIndex::ScalingRotation { mu, b } => {
                if !(mu > 0.0 && mu <= 1.0) {
                    return Err(Error::invalid("mu", format!("rotation class needs 0 < mu <= 1, got {mu}")));
                }
                if b == 0.0 || !b.is_finite() {
                    return Err(Error::invalid("b", "rotation rate must be finite and nonzero"));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match *self {
            StableIndex::PureScaling { d, .. } => d,
            StableIndex::ScalingRotation { .. } => 2,
        }
    }

    pub fn mu(&self) -> f64 {
        match *self {
            StableIndex::PureScaling { mu, .. } | StableIndex::ScalingRotation { mu, .. } => mu,
        }
    }

    /// Real part shared by all eigenvalues of `E`.
    pub fn scale_exponent(&self) -> f64 {
        match *self {
            StableIndex::PureScaling { d, mu } => 1.0 / (d as f64 * mu),
            StableIndex::ScalingRotation { mu, .. } => 1.0 / (2.0 * mu),
        }
    }

    pub fn trace(&self) -> f64 {
        1.0 / self.mu()
    }

    /// The matrix `E` itself.
    pub fn matrix(&self) -> DMatrix<f64> {
        match *self {
            StableIndex::PureScaling { d, .. } => DMatrix::identity(d, d) * self.scale_exponent(),
            StableIndex::ScalingRotation { b, .. } => {
                let a = self.scale_exponent();
                DMatrix::from_row_slice(2, 2, &[a, -b, b, a])
            }
        }
    }
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("scaling factor must be positive and finite, got {t}")))
    }
}

fn rotation(angle: f64) -> DMatrix<f64> {
    let (s, c) = angle.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// `t^E = exp(E ln t)`.
pub fn matrix_power(t: f64, e: &StableIndex) -> Result<DMatrix<f64>> {
    check_t(t)?;
    e.validate()?;
    let r = t.powf(e.scale_exponent());
    Ok(match *e {
        StableIndex::PureScaling { d, .. } => DMatrix::identity(d, d) * r,
        StableIndex::ScalingRotation { b, .. } => rotation(b * t.ln()) * r,
    })
}

/// `t^{E^T} k`. For the rotation class the angle is `-b ln t`.
pub fn transpose_power_apply(t: f64, e: &StableIndex, k: &[f64]) -> Result<Vec<f64>> {
    check_t(t)?;
    e.validate()?;
    if k.len() != e.dim() {
        return Err(Error::Contract(format!(
            "vector of length {} does not match index dimension {}",
            k.len(),
            e.dim()
        )));
    }
    let r = t.powf(e.scale_exponent());
    Ok(match *e {
        StableIndex::PureScaling { .. } => k.iter().map(|x| r * x).collect(),
        StableIndex::ScalingRotation { b, .. } => {
            let (s, c) = (-b * t.ln()).sin_cos();
            vec![r * (c * k[0] - s * k[1]), r * (s * k[0] + c * k[1])]
        }
    })
}

/// `det(t^E) = t^{tr E} = t^{1/mu}`.
pub fn determinant_power(t: f64, e: &StableIndex) -> Result<f64> {
    check_t(t)?;
    e.validate()?;
    Ok(t.powf(e.trace()))
}

/// Block-diagonal stable index built from solvable blocks.
///
/// Only powers and determinants are defined; characteristic functions are
/// available per block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockIndex {
    blocks: Vec<StableIndex>,
}

impl BlockIndex {
    pub fn new(blocks: Vec<StableIndex>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::invalid("blocks", "at least one block is required"));
        }
        for b in &blocks {
            b.validate()?;
        }
        Ok(BlockIndex { blocks })
    }

    pub fn blocks(&self) -> &[StableIndex] {
        &self.blocks
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(StableIndex::dim).sum()
    }

    pub fn trace(&self) -> f64 {
        self.blocks.iter().map(StableIndex::trace).sum()
    }

    fn assemble<F: Fn(&StableIndex) -> Result<DMatrix<f64>>>(&self, f: F) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        let mut off = 0;
        for b in &self.blocks {
            let sub = f(b)?;
            let d = b.dim();
            m.view_mut((off, off), (d, d)).copy_from(&sub);
            off += d;
        }
        Ok(m)
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        self.assemble(|b| Ok(b.matrix())).expect("blocks are valid")
    }

    pub fn matrix_power(&self, t: f64) -> Result<DMatrix<f64>> {
        self.assemble(|b| matrix_power(t, b))
    }

    pub fn transpose_power_apply(&self, t: f64, k: &[f64]) -> Result<Vec<f64>> {
        if k.len() != self.dim() {
            return Err(Error::Contract(format!(
                "vector of length {} does not match index dimension {}",
                k.len(),
                self.dim()
            )));
        }
        let m = self.matrix_power(t)?;
        let v = m.transpose() * DVector::from_column_slice(k);
        Ok(v.iter().copied().collect())
    }

    pub fn determinant_power(&self, t: f64) -> Result<f64> {
        check_t(t)?;
        Ok(t.powf(self.trace()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Truncated exponential series, independent of the closed forms.
    fn series_exp(a: &DMatrix<f64>, terms: usize) -> DMatrix<f64> {
        let n = a.nrows();
        let mut sum = DMatrix::identity(n, n);
        let mut term = DMatrix::identity(n, n);
        for j in 1..terms {
            term = &term * a / j as f64;
            sum += &term;
        }
        sum
    }

    fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).abs().max()
    }

    #[test]
    fn unit_scaling_is_identity() {
        for e in [
            StableIndex::pure_scaling(3, 0.5).unwrap(),
            StableIndex::scaling_rotation(0.7, 2.5).unwrap(),
        ] {
            let m = matrix_power(1.0, &e).unwrap();
            assert_eq!(m, DMatrix::identity(e.dim(), e.dim()));
            assert_eq!(determinant_power(1.0, &e).unwrap(), 1.0);
        }
    }

    #[test]
    fn gaussian_index_square_root() {
        let e = StableIndex::pure_scaling(1, 2.0).unwrap();
        let m = matrix_power(4.0, &e).unwrap();
        assert!((m[(0, 0)] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn full_turn_rotation_matches_series() {
        let (mu, b) = (0.8, 3.0);
        let e = StableIndex::scaling_rotation(mu, b).unwrap();
        let t = (2.0 * std::f64::consts::PI / b).exp();
        let closed = matrix_power(t, &e).unwrap();
        let oracle = series_exp(&(e.matrix() * t.ln()), 50);
        let expected = DMatrix::identity(2, 2) * (std::f64::consts::PI / (mu * b)).exp();
        assert!(max_abs_diff(&closed, &oracle) < 1e-12);
        assert!(max_abs_diff(&closed, &expected) < 1e-12);
    }

    #[test]
    fn series_oracle_agrees_off_turn() {
        let e = StableIndex::scaling_rotation(0.6, -1.3).unwrap();
        for t in [0.2, 0.9, 2.5, 7.0] {
            let closed = matrix_power(t, &e).unwrap();
            let oracle = series_exp(&(e.matrix() * f64::ln(t)), 50);
            assert!(max_abs_diff(&closed, &oracle) < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn pure_scaling_transpose_scales_length() {
        let e = StableIndex::pure_scaling(2, 0.8).unwrap();
        let k = [0.3, -1.1];
        let out = transpose_power_apply(3.7, &e, &k).unwrap();
        let r = 3.7f64.powf(1.0 / 1.6);
        assert!((out[0] - r * k[0]).abs() < 1e-15);
        assert!((out[1] - r * k[1]).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        let e = StableIndex::pure_scaling(2, 0.5).unwrap();
        assert!(matches!(matrix_power(0.0, &e), Err(Error::Domain(_))));
        assert!(matches!(matrix_power(-1.0, &e), Err(Error::Domain(_))));
        assert!(matches!(transpose_power_apply(2.0, &e, &[1.0]), Err(Error::Contract(_))));
        assert!(StableIndex::pure_scaling(2, 1.5).is_err());
        assert!(StableIndex::scaling_rotation(1.2, 1.0).is_err());
        assert!(StableIndex::scaling_rotation(0.5, 0.0).is_err());
    }

    #[test]
    fn block_index_concatenates() {
        let bi = BlockIndex::new(vec![
            StableIndex::pure_scaling(1, 1.5).unwrap(),
            StableIndex::scaling_rotation(0.9, 2.0).unwrap(),
        ])
        .unwrap();
        assert_eq!(bi.dim(), 3);
        let t = 2.3;
        let m = bi.matrix_power(t).unwrap();
        let oracle = series_exp(&(bi.matrix() * f64::ln(t)), 50);
        assert!(max_abs_diff(&m, &oracle) < 1e-12);
        let det = m.determinant();
        assert!((det / bi.determinant_power(t).unwrap() - 1.0).abs() < 1e-12);
    }

    fn any_index() -> impl Strategy<Value = StableIndex> {
        prop_oneof![
            (1usize..4, 0.05f64..1.0).prop_map(|(d, f)| StableIndex::PureScaling {
                d,
                mu: f * 2.0 / d as f64
            }),
            (0.05f64..=1.0, 0.1f64..5.0, any::<bool>()).prop_map(|(mu, b, s)| {
                StableIndex::ScalingRotation { mu, b: if s { b } else { -b } }
            }),
        ]
    }

    proptest! {
        #[test]
        fn semigroup(e in any_index(), s in 0.1f64..10.0, t in 0.1f64..10.0) {
            let lhs = matrix_power(s, &e).unwrap() * matrix_power(t, &e).unwrap();
            let rhs = matrix_power(s * t, &e).unwrap();
            let scale = rhs.abs().max().max(1.0);
            prop_assert!(max_abs_diff(&lhs, &rhs) <= 1e-12 * scale);
        }

        #[test]
        fn determinant_consistency(e in any_index(), t in 0.1f64..10.0) {
            let det = matrix_power(t, &e).unwrap().determinant();
            let want = determinant_power(t, &e).unwrap();
            prop_assert!((det / want - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn transpose_consistency(
            e in any_index(),
            t in 0.1f64..10.0,
            k in prop::collection::vec(-5.0f64..5.0, 3),
        ) {
            let k = &k[..e.dim()];
            let got = transpose_power_apply(t, &e, k).unwrap();
            let m = matrix_power(t, &e).unwrap().transpose();
            let want = m * DVector::from_column_slice(k);
            for i in 0..k.len() {
                prop_assert!((got[i] - want[i]).abs() <= 1e-14 * want.amax().max(1.0));
            }
        }
    }
}
