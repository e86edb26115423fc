//! GAS-driven time-varying reputation. A latent score per coprocessor
//! evolves by the scaled-score recursion
//!
//!   f_{t+1} = omega + beta * f_t + alpha * S(f_t) * score(y_t, f_t)
//!
//! with a Bernoulli observation density p(y=1 | f) = sigma(f), so the
//! score is y - sigma(f). Reputation exposed to the auction is sigma(f).

use crate::{logistic, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    Identity,
    /// 1 / (sigma(f) (1 - sigma(f))): inverse Fisher information of the
    /// Bernoulli density.
    InverseFisher,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GasParams {
    /// Intercept omega.
    pub omega: f64,
    /// Persistence beta; |beta| < 1 for stationarity.
    pub beta: f64,
    /// Score loading alpha >= 0.
    pub alpha: f64,
    pub scaling: Scaling,
}

impl Default for GasParams {
    fn default() -> Self {
        Self {
            omega: 0.0,
            beta: 0.98,
            alpha: 0.1,
            scaling: Scaling::Identity,
        }
    }
}

impl GasParams {
    pub fn validate(&self) -> Result<()> {
        if self.beta.abs() >= 1.0 {
            return Err(Error::Config(format!(
                "gas.beta {} must satisfy |beta| < 1",
                self.beta
            )));
        }
        if self.alpha < 0.0 {
            return Err(Error::Config(format!(
                "gas.alpha {} must be nonnegative",
                self.alpha
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasState {
    /// Latent score f_t.
    pub f: f64,
    pub t: u64,
}

impl Default for GasState {
    fn default() -> Self {
        Self { f: 0.0, t: 0 }
    }
}

/// Score of the Bernoulli log density: d/df log p(y | sigma(f)) = y - sigma(f).
pub fn score(y: bool, f: f64) -> f64 {
    (y as u8 as f64) - logistic(f)
}

/// Scaling function S(f).
pub fn scaling_factor(f: f64, scaling: Scaling) -> f64 {
    match scaling {
        Scaling::Identity => 1.0,
        Scaling::InverseFisher => {
            let s = logistic(f);
            1.0 / (s * (1.0 - s))
        }
    }
}

/// One step of the scaled-score recursion.
pub fn gas_update(state: GasState, y: bool, params: &GasParams) -> Result<GasState> {
    let f = params.omega
        + params.beta * state.f
        + params.alpha * scaling_factor(state.f, params.scaling) * score(y, state.f);
    if !f.is_finite() {
        return Err(Error::Numeric(format!(
            "gas_update produced non-finite f from f={} y={}",
            state.f, y
        )));
    }
    Ok(GasState { f, t: state.t + 1 })
}

/// Latent score mapped to the (0, 1) reputation used by the auction.
pub fn reputation_of(state: GasState) -> f64 {
    logistic(state.f)
}
