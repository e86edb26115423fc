//! Modified Dutch auction: a common descending price schedule per task,
//! with per-coprocessor acceptance thresholds driven by resources and
//! current workload.
//!
//! Each coprocessor's threshold is the minimum price covering its cost for
//! the task; a coprocessor holds out while the price remains above that
//! floor and accepts at the last schedule price still >= it. The auction
//! resolves at the earliest acceptance step; simultaneous acceptors are
//! ranked by reputation, then by lowest id.

use crate::model::{CoprocessorState, Task};

/// Price-schedule and threshold parameters of the auction.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuctionParams {
    /// Start price = fraction * task.reward, in (0, 1].
    pub start_price_fraction: f64,
    /// Price drop per step, > 0.
    pub decrement: f64,
    pub max_steps: u32,
    /// Cost scale of the acceptance threshold.
    pub cost_base: f64,
    /// Workload sensitivity lambda: threshold grows by (1 + lambda * load).
    pub load_lambda: f64,
    /// Floor on the resources divisor.
    pub epsilon: f64,
}

impl Default for AuctionParams {
    fn default() -> Self {
        Self {
            start_price_fraction: 0.8,
            decrement: 0.05,
            max_steps: 10,
            cost_base: 1.0,
            load_lambda: 1.0,
            epsilon: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuctionOutcome {
    pub winner: Option<u64>,
    pub clearing_price: Option<f64>,
    pub step: Option<usize>,
    pub schedule: Vec<f64>,
}

/// Descending price schedule: start at fraction * reward, drop by the
/// decrement each step, clamp at 0 and truncate after the first 0.
pub fn price_schedule(task: &Task, params: &AuctionParams) -> Vec<f64> {
    if task.reward <= 0.0 {
        return Vec::new();
    }
    let p0 = params.start_price_fraction * task.reward;
    let mut schedule = Vec::with_capacity(params.max_steps as usize);
    for i in 0..params.max_steps {
        let p = p0 - f64::from(i) * params.decrement;
        if p <= 0.0 {
            schedule.push(0.0);
            break;
        }
        schedule.push(p);
    }
    schedule
}

/// Minimum price at which `c` accepts `task`: cost scaled by difficulty
/// over resources, inflated by current load. Loaded or under-resourced
/// coprocessors need higher prices, so they accept earlier in the
/// descent while capable idle ones hold out for cheaper steps.
pub fn acceptance_threshold(c: &CoprocessorState, task: &Task, params: &AuctionParams) -> f64 {
    params.cost_base * task.difficulty / params.epsilon.max(c.resources)
        * (1.0 + params.load_lambda * c.load)
}

/// Eligibility to bid at all: spare capacity for the task and enough
/// collateral on balance.
pub fn eligible(c: &CoprocessorState, task: &Task, params: &AuctionParams, min_collateral: f64) -> bool {
    let added = task.difficulty / params.epsilon.max(c.resources);
    c.load + added <= 1.0 && c.collateral_balance >= min_collateral
}

/// Walk the schedule top-down and resolve the first acceptance.
pub fn run_dutch_auction(
    task: &Task,
    coprocessors: &[CoprocessorState],
    params: &AuctionParams,
    min_collateral: f64,
) -> AuctionOutcome {
    let schedule = price_schedule(task, params);
    let mut winner: Option<(usize, f64, u64)> = None; // (step, reputation, id)
    if !schedule.is_empty() {
        for c in coprocessors {
            if !eligible(c, task, params, min_collateral) {
                continue;
            }
            let threshold = acceptance_threshold(c, task, params);
            // Last step whose price still covers the threshold.
            let step = match schedule.iter().rposition(|&p| p >= threshold) {
                Some(s) => s,
                None => continue,
            };
            let rep = c.reputation();
            let beats = match winner {
                None => true,
                Some((ws, wrep, wid)) => {
                    step < ws || (step == ws && (rep > wrep || (rep == wrep && c.id < wid)))
                }
            };
            if beats {
                winner = Some((step, rep, c.id));
            }
        }
    }
    match winner {
        Some((step, _, id)) => AuctionOutcome {
            winner: Some(id),
            clearing_price: Some(schedule[step]),
            step: Some(step),
            schedule,
        },
        None => AuctionOutcome {
            winner: None,
            clearing_price: None,
            step: None,
            schedule,
        },
    }
}
