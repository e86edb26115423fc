//! Simulation configuration: defaults matching the experimental setup
//! (100 operators x 100 coprocessors x 1000 periods x 1000 tasks/period),
//! TOML config files with unknown-key rejection, and dotted-path
//! overrides such as `gas.beta=0.9`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::auction::AuctionParams;
use crate::curve::CurveParams;
use crate::model::ModelParams;
use crate::reputation::GasParams;
use crate::{Error, Result};

/// Task generation distributions. Difficulty is LogNormal(mu, sigma);
/// reward is proportional to difficulty with multiplicative uniform
/// noise; the penalty base is proportional to the reward; risk is
/// Uniform[0, risk_max].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaskGenParams {
    pub difficulty_mu: f64,
    pub difficulty_sigma: f64,
    pub reward_rate: f64,
    /// Reward noise amplitude: factor is uniform in [1 - a, 1 + a].
    pub reward_noise: f64,
    pub penalty_ratio: f64,
    pub risk_max: f64,
}

impl Default for TaskGenParams {
    fn default() -> Self {
        Self {
            difficulty_mu: 0.0,
            difficulty_sigma: 0.6,
            reward_rate: 1.0,
            reward_noise: 0.1,
            penalty_ratio: 1.0,
            risk_max: 0.5,
        }
    }
}

/// What happens to an auctionable task that finds no winner (or is
/// released by the allocation cross-check).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnassignedFallback {
    /// The task is dropped: no reward, no slash.
    Drop,
    /// The owning operator executes it despite the resource shortfall.
    SelfExecute,
}

/// Engine-level knobs: population initialization ranges, stake and
/// collateral endowments, slashing split, and load persistence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineParams {
    pub operator_resources_min: f64,
    pub operator_resources_max: f64,
    pub coprocessor_resources_min: f64,
    pub coprocessor_resources_max: f64,
    pub initial_stake: f64,
    pub initial_collateral: f64,
    pub initial_operator_reputation: f64,
    /// Fraction of the delegated slash amount also borne by the operator.
    pub operator_slash_fraction: f64,
    /// Per-period load decay in [0, 1]; 1.0 resets load each period.
    pub load_decay: f64,
    pub unassigned_fallback: UnassignedFallback,
}

impl Default for EngineParams {
    fn default() -> Self {
        Self {
            operator_resources_min: 0.5,
            operator_resources_max: 2.5,
            coprocessor_resources_min: 2.0,
            coprocessor_resources_max: 10.0,
            initial_stake: 20.0,
            initial_collateral: 100.0,
            initial_operator_reputation: 0.5,
            operator_slash_fraction: 0.25,
            load_decay: 1.0,
            unassigned_fallback: UnassignedFallback::Drop,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub n_operators: u32,
    pub n_coprocessors: u32,
    pub periods: u32,
    pub tasks_per_period: u32,
    /// Global slash factor s.
    pub slash_factor: f64,
    pub min_collateral: f64,
    pub rng_seed: u64,
    /// Operators with stake below this become inactive.
    pub deactivation_threshold: f64,
    pub model: ModelParams,
    pub tasks: TaskGenParams,
    pub engine: EngineParams,
    pub auction: AuctionParams,
    pub curve: CurveParams,
    pub gas: GasParams,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            n_operators: 100,
            n_coprocessors: 100,
            periods: 1000,
            tasks_per_period: 1000,
            slash_factor: 0.1,
            min_collateral: 1.0,
            rng_seed: 42,
            deactivation_threshold: 0.0,
            model: ModelParams::default(),
            tasks: TaskGenParams::default(),
            engine: EngineParams::default(),
            auction: AuctionParams::default(),
            curve: CurveParams::default(),
            gas: GasParams::default(),
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_operators < 1
            || self.n_coprocessors < 1
            || self.periods < 1
            || self.tasks_per_period < 1
        {
            return Err(Error::Config(
                "n_operators, n_coprocessors, periods and tasks_per_period must be >= 1".into(),
            ));
        }
        if self.slash_factor < 0.0 || self.min_collateral < 0.0 {
            return Err(Error::Config(
                "slash_factor and min_collateral must be nonnegative".into(),
            ));
        }
        if !(self.auction.start_price_fraction > 0.0 && self.auction.start_price_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "auction.start_price_fraction {} outside (0,1]",
                self.auction.start_price_fraction
            )));
        }
        if self.auction.decrement <= 0.0 || self.auction.max_steps < 1 {
            return Err(Error::Config(
                "auction.decrement must be > 0 and auction.max_steps >= 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.engine.load_decay) {
            return Err(Error::Config(format!(
                "engine.load_decay {} outside [0,1]",
                self.engine.load_decay
            )));
        }
        self.gas.validate()?;
        self.curve.validate()?;
        Ok(())
    }

    /// Parse a TOML config file, apply `key=value` overrides (dotted
    /// paths reach nested tables), and validate. The curve is
    /// re-calibrated so D and I always satisfy continuity.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: toml::Value = text
            .parse()
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(value, overrides)
    }

    /// Built-in defaults plus overrides, without reading a file.
    pub fn from_overrides(overrides: &[String]) -> Result<Self> {
        let value = toml::Value::try_from(SimulationConfig::default())
            .map_err(|e| Error::Config(e.to_string()))?;
        Self::from_toml(value, overrides)
    }

    fn from_toml(mut value: toml::Value, overrides: &[String]) -> Result<Self> {
        for ov in overrides {
            apply_override(&mut value, ov)?;
        }
        let mut cfg: SimulationConfig = value
            .try_into()
            .map_err(|e| Error::Config(e.to_string()))?;
        cfg.curve = crate::curve::calibrate(&cfg.curve)
            .map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Apply one `dotted.path=value` override to a TOML document.
fn apply_override(root: &mut toml::Value, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{spec}' is not key=value")))?;
    let mut node = root;
    let segments: Vec<&str> = path.split('.').collect();
    for (k, seg) in segments.iter().enumerate() {
        let table = node.as_table_mut().ok_or_else(|| {
            Error::Config(format!("override path '{path}' does not address a table"))
        })?;
        if k + 1 == segments.len() {
            table.insert(seg.to_string(), parse_toml_scalar(raw));
            return Ok(());
        }
        node = table
            .get_mut(*seg)
            .ok_or_else(|| Error::Config(format!("unknown config section '{seg}' in '{path}'")))?;
    }
    unreachable!("split('.') yields at least one segment");
}

fn parse_toml_scalar(raw: &str) -> toml::Value {
    if let Ok(v) = raw.parse::<i64>() {
        return toml::Value::Integer(v);
    }
    if let Ok(v) = raw.parse::<f64>() {
        return toml::Value::Float(v);
    }
    if let Ok(v) = raw.parse::<bool>() {
        return toml::Value::Boolean(v);
    }
    toml::Value::String(raw.to_string())
}
