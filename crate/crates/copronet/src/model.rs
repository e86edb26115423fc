//! Domain types shared by allocation, auction, and the simulation engine,
//! plus the success-probability model.

use crate::{logistic, Error, Result};

/// One unit of AVS work.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub id: u64,
    /// Abstract compute units required.
    pub difficulty: f64,
    /// Token reward on successful completion.
    pub reward: f64,
    /// Token penalty base; the realized slash is `slash_factor * base_penalty`
    /// (times the load amplifier for delegated work).
    pub base_penalty: f64,
    /// In [0, 1]; attenuates the success probability of low-reputation executors.
    pub risk_factor: f64,
}

impl Task {
    pub fn validate(&self) -> Result<()> {
        if self.difficulty < 0.0 || self.reward < 0.0 || self.base_penalty < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "task {}: difficulty, reward and base_penalty must be nonnegative",
                self.id
            )));
        }
        if !(0.0..=1.0).contains(&self.risk_factor) {
            return Err(Error::InvalidArgument(format!(
                "task {}: risk_factor {} outside [0,1]",
                self.id, self.risk_factor
            )));
        }
        Ok(())
    }
}

/// A network operator: validates tasks itself or delegates them via auction.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorState {
    pub id: u64,
    /// Compute units available per period.
    pub resources: f64,
    /// In [0, 1], updated by an EMA of task outcomes.
    pub reputation: f64,
    /// Token stake; only slashing moves it. May go negative transiently
    /// before the deactivation rule fires.
    pub stake: f64,
    pub cumulative_reward: f64,
    /// Cleared once stake falls below the deactivation threshold; an
    /// operator never reactivates within a run.
    pub active: bool,
}

/// A coprocessor: bids for delegated tasks against posted collateral.
#[derive(Debug, Clone, PartialEq)]
pub struct CoprocessorState {
    pub id: u64,
    /// Compute units available per period.
    pub resources: f64,
    /// Fraction of resources committed this period, in [0, 1].
    pub load: f64,
    pub collateral_balance: f64,
    /// Latent GAS score f_t; reputation is its logistic transform.
    pub gas_score: f64,
    pub cumulative_reward: f64,
}

impl CoprocessorState {
    /// Reputation derived from the latent score, in (0, 1).
    pub fn reputation(&self) -> f64 {
        logistic(self.gas_score)
    }
}

/// The binary delegation decision x_{v,c,a} with its bid and collateral.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub operator_id: u64,
    /// Absent when the operator self-executes.
    pub coprocessor_id: Option<u64>,
    pub task_id: u64,
    /// Auction clearing price b_{c,a}.
    pub bid_price: f64,
    /// Collateral l_{c,a} posted by the coprocessor.
    pub collateral: f64,
    /// False once the operator's allocation cross-check releases the task.
    pub selected: bool,
}

/// Parameters of the success-probability model.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    /// Gain k of the logistic in the resource gap.
    pub success_gain: f64,
    /// EMA rate for operator reputation updates.
    pub reputation_ema: f64,
    /// Operators self-execute when resources * headroom >= difficulty.
    pub headroom_factor: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            success_gain: 1.0,
            reputation_ema: 0.05,
            headroom_factor: 1.0,
        }
    }
}

/// Probability that the executing party completes `task` successfully.
///
/// The executing party is `coprocessor` when present, otherwise the
/// operator (self-execution). Logistic in the resource/difficulty gap,
/// attenuated by task risk against the executor's reputation:
///
/// p = clamp(sigma(k * (capability - difficulty)) * (1 - risk * (1 - rep)), 0, 1)
pub fn success_probability(
    operator: &OperatorState,
    coprocessor: Option<&CoprocessorState>,
    task: &Task,
    params: &ModelParams,
) -> f64 {
    let (capability, rep) = match coprocessor {
        Some(c) => (c.resources, c.reputation()),
        None => (operator.resources, operator.reputation),
    };
    let base = logistic(params.success_gain * (capability - task.difficulty));
    let p = base * (1.0 - task.risk_factor * (1.0 - rep));
    p.clamp(0.0, 1.0)
}
