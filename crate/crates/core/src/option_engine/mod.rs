//! Portfolio deviations, the no-drift condition and the option surface.

mod deviation;
mod pde;
mod tail;

pub use deviation::{
    deviation_char, deviation_char_quadrature, deviation_char_small_k, deviation_sample,
    drift_derivative, DeviationQuery, DeviationValue, SurfaceJet, SMALL_K_THRESHOLD,
};
pub use pde::{
    black_scholes_call, fornberg_weights, pde_residual, solve_option, Correction, GridConfig,
    LimitProbe, OptionGrid, OptionSolution, SolveReport, TailCheck, OPTION_SCHEMA_VERSION,
};
pub use tail::{m_kernel, n_fun_delta, residual_mass, solve_frak_m, DeltaLimit, TailLaw};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// European call with strike `K`, maturity `T` and rate `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionSpec {
    pub strike: f64,
    pub maturity: f64,
    pub rate: f64,
}

impl OptionSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.strike > 0.0) {
            return Err(Error::invalid("strike", "must be positive"));
        }
        if !(self.maturity > 0.0) {
            return Err(Error::invalid("maturity", "must be positive"));
        }
        if !self.rate.is_finite() {
            return Err(Error::invalid("rate", "must be finite"));
        }
        Ok(())
    }

    pub fn payoff(&self, s: f64) -> f64 {
        (s - self.strike).max(0.0)
    }
}
