//! The period-loop simulation: task generation, operator decisions,
//! Dutch auctions, the allocation cross-check, execution with rewards and
//! slashing, GAS/EMA reputation updates, attrition, and load decay.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

use crate::allocation::{solve_greedy, AllocationInstance, Candidate};
use crate::auction::run_dutch_auction;
use crate::config::{SimulationConfig, UnassignedFallback};
use crate::curve::incentive_multipliers;
use crate::metrics::MetricsFrame;
use crate::model::{success_probability, Assignment, CoprocessorState, OperatorState, Task};
use crate::reputation::{gas_update, GasState};
use crate::Result;

/// The choice an operator makes for one of its tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    SelfExecute,
    Auction,
}

/// Operators self-execute whenever their resources (times the headroom
/// factor) cover the task difficulty, boundary inclusive.
pub fn operator_decide(op: &OperatorState, task: &Task, headroom_factor: f64) -> Decision {
    if op.resources * headroom_factor >= task.difficulty {
        Decision::SelfExecute
    } else {
        Decision::Auction
    }
}

/// Outcome of one executed task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskOutcome {
    pub task_id: u64,
    pub operator_id: u64,
    /// None for self-execution.
    pub coprocessor_id: Option<u64>,
    pub success: bool,
    /// Total tokens credited for this task (operator share + coprocessor
    /// share + load-curve bonus).
    pub reward_paid: f64,
    /// Total tokens slashed for this task.
    pub slash_applied: f64,
}

/// State recorded at the moment an auction cleared, so audits can
/// recompute the winner's threshold and schedule independently.
#[derive(Debug, Clone, PartialEq)]
pub struct AuctionAudit {
    pub task_id: u64,
    pub difficulty: f64,
    pub reward: f64,
    pub winner_id: u64,
    pub clearing_price: f64,
    pub step: usize,
    /// Winner's resources (constant) and load just before the win landed.
    pub winner_resources: f64,
    pub winner_load: f64,
    pub winner_collateral_balance: f64,
}

/// Everything that happened in one period.
#[derive(Debug, Clone, Default)]
pub struct PeriodReport {
    pub period: u32,
    /// All auction assignments, including released ones (selected = false).
    pub assignments: Vec<Assignment>,
    pub outcomes: Vec<TaskOutcome>,
    /// Per-coprocessor load committed this period, snapshotted before decay.
    pub loads: Vec<f64>,
    pub auction_audits: Vec<AuctionAudit>,
}

pub struct Simulation {
    pub config: SimulationConfig,
    pub operators: Vec<OperatorState>,
    pub coprocessors: Vec<CoprocessorState>,
    gas_states: Vec<GasState>,
    pub period: u32,
    /// Running total of all rewards paid, accumulated in report order so
    /// an independent replay of the reports reproduces it bit-exactly.
    pub cumulative_reward_total: f64,
    pub cumulative_slash_total: f64,
}

impl Simulation {
    pub fn new(config: SimulationConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = stream_rng(config.rng_seed, 0);
        let e = &config.engine;
        let operators = (0..config.n_operators)
            .map(|id| OperatorState {
                id: u64::from(id),
                resources: rng.gen_range(e.operator_resources_min..=e.operator_resources_max),
                reputation: e.initial_operator_reputation,
                stake: e.initial_stake,
                cumulative_reward: 0.0,
                active: true,
            })
            .collect();
        let coprocessors = (0..config.n_coprocessors)
            .map(|id| CoprocessorState {
                id: u64::from(id),
                resources: rng
                    .gen_range(e.coprocessor_resources_min..=e.coprocessor_resources_max),
                load: 0.0,
                collateral_balance: e.initial_collateral,
                gas_score: 0.0,
                cumulative_reward: 0.0,
            })
            .collect();
        let gas_states = vec![GasState::default(); config.n_coprocessors as usize];
        Ok(Self {
            config,
            operators,
            coprocessors,
            gas_states,
            period: 0,
            cumulative_reward_total: 0.0,
            cumulative_slash_total: 0.0,
        })
    }

    /// Draw this period's tasks. Deterministic in (seed, period): the
    /// generator stream is derived from both.
    pub fn generate_tasks(&self) -> Vec<Task> {
        let cfg = &self.config;
        let mut rng = stream_rng(cfg.rng_seed, 1 + 2 * u64::from(self.period));
        let p = &cfg.tasks;
        let difficulty_dist = LogNormal::new(p.difficulty_mu, p.difficulty_sigma)
            .expect("validated sigma");
        let base = u64::from(self.period) * u64::from(cfg.tasks_per_period);
        (0..cfg.tasks_per_period)
            .map(|k| {
                let difficulty = difficulty_dist.sample(&mut rng);
                let noise = rng.gen_range(-p.reward_noise..=p.reward_noise);
                let reward = difficulty * p.reward_rate * (1.0 + noise);
                Task {
                    id: base + u64::from(k),
                    difficulty,
                    reward,
                    base_penalty: reward * p.penalty_ratio,
                    risk_factor: rng.gen_range(0.0..=p.risk_max),
                }
            })
            .collect()
    }

    /// Run one period and return its report.
    pub fn step(&mut self) -> Result<PeriodReport> {
        let cfg = self.config;
        let mut report = PeriodReport {
            period: self.period,
            ..PeriodReport::default()
        };

        let active_ids: Vec<usize> = self
            .operators
            .iter()
            .enumerate()
            .filter(|(_, o)| o.active)
            .map(|(i, _)| i)
            .collect();

        if !active_ids.is_empty() {
            let tasks = self.generate_tasks();
            // Owner draws and outcome draws come from a stream separate
            // from task generation, so both are period-deterministic.
            let mut exec_rng = stream_rng(cfg.rng_seed, 2 + 2 * u64::from(self.period));

            // (1) uniform random owner per task
            let owners: Vec<usize> = tasks
                .iter()
                .map(|_| active_ids[exec_rng.gen_range(0..active_ids.len())])
                .collect();

            // (2) partition into self-executed and auctionable
            let mut self_exec: Vec<usize> = Vec::new();
            let mut auctionable: Vec<usize> = Vec::new();
            for (ti, task) in tasks.iter().enumerate() {
                let op = &self.operators[owners[ti]];
                match operator_decide(op, task, cfg.model.headroom_factor) {
                    Decision::SelfExecute => self_exec.push(ti),
                    Decision::Auction => auctionable.push(ti),
                }
            }

            // (3) Dutch auctions in task-id order; loads accrue as wins land.
            // won[ti] = (coprocessor index, clearing price)
            let mut won: Vec<Option<(usize, f64)>> = vec![None; tasks.len()];
            for &ti in &auctionable {
                let task = &tasks[ti];
                let outcome =
                    run_dutch_auction(task, &self.coprocessors, &cfg.auction, cfg.min_collateral);
                if let (Some(cid), Some(price)) = (outcome.winner, outcome.clearing_price) {
                    let ci = cid as usize;
                    let c = &mut self.coprocessors[ci];
                    report.auction_audits.push(AuctionAudit {
                        task_id: task.id,
                        difficulty: task.difficulty,
                        reward: task.reward,
                        winner_id: cid,
                        clearing_price: price,
                        step: outcome.step.expect("winner implies step"),
                        winner_resources: c.resources,
                        winner_load: c.load,
                        winner_collateral_balance: c.collateral_balance,
                    });
                    c.load = (c.load + task.difficulty / cfg.auction.epsilon.max(c.resources))
                        .min(1.0);
                    won[ti] = Some((ci, price));
                }
            }

            // (4) allocation cross-check per operator: released tasks give
            // their load back and fall through to the fallback rule.
            let mut selected: Vec<bool> = vec![false; tasks.len()];
            for &oi in &active_ids {
                let mut op_tasks: Vec<usize> = Vec::new();
                for &ti in &auctionable {
                    if owners[ti] == oi && won[ti].is_some() {
                        op_tasks.push(ti);
                    }
                }
                if op_tasks.is_empty() {
                    continue;
                }
                let instance = AllocationInstance {
                    tasks: op_tasks.iter().map(|&ti| tasks[ti].clone()).collect(),
                    candidates: op_tasks
                        .iter()
                        .map(|&ti| {
                            let (ci, price) = won[ti].expect("filtered to wins");
                            vec![Candidate {
                                coprocessor_id: self.coprocessors[ci].id,
                                p: success_probability(
                                    &self.operators[oi],
                                    Some(&self.coprocessors[ci]),
                                    &tasks[ti],
                                    &cfg.model,
                                ),
                                bid_price: price,
                                collateral: cfg.min_collateral,
                            }]
                        })
                        .collect(),
                    slash_factor: cfg.slash_factor,
                    min_collateral: cfg.min_collateral,
                };
                let result = solve_greedy(&instance)?;
                for &ti in &op_tasks {
                    selected[ti] = result.selected[&tasks[ti].id].is_some();
                }
            }
            for &ti in &auctionable {
                let Some((ci, price)) = won[ti] else { continue };
                if !selected[ti] {
                    // released: roll the capacity back
                    let c = &mut self.coprocessors[ci];
                    c.load = (c.load
                        - tasks[ti].difficulty / cfg.auction.epsilon.max(c.resources))
                    .max(0.0);
                }
                report.assignments.push(Assignment {
                    operator_id: self.operators[owners[ti]].id,
                    coprocessor_id: Some(self.coprocessors[ci].id),
                    task_id: tasks[ti].id,
                    bid_price: price,
                    collateral: cfg.min_collateral,
                    selected: selected[ti],
                });
            }

            // Unwon or released auctionable tasks follow the fallback rule.
            if cfg.engine.unassigned_fallback == UnassignedFallback::SelfExecute {
                for &ti in &auctionable {
                    if won[ti].is_none() || !selected[ti] {
                        self_exec.push(ti);
                    }
                }
                self_exec.sort_unstable();
            }

            // (5) execution in task-id order
            for (ti, task) in tasks.iter().enumerate() {
                let oi = owners[ti];
                if let Some((ci, price)) = won[ti] {
                    if !selected[ti] {
                        continue;
                    }
                    let p = success_probability(
                        &self.operators[oi],
                        Some(&self.coprocessors[ci]),
                        task,
                        &cfg.model,
                    );
                    let success = exec_rng.gen_bool(p.clamp(0.0, 1.0));
                    let load = self.coprocessors[ci].load;
                    let (bonus, amplifier) = incentive_multipliers(load, &cfg.curve)?;
                    let (reward_paid, slash_applied) = if success {
                        let op_share = task.reward - price;
                        let co_share = price + bonus;
                        self.operators[oi].cumulative_reward += op_share;
                        let c = &mut self.coprocessors[ci];
                        c.cumulative_reward += co_share;
                        c.collateral_balance += co_share;
                        (op_share + co_share, 0.0)
                    } else {
                        let base = cfg.slash_factor * task.base_penalty * amplifier;
                        let c = &mut self.coprocessors[ci];
                        let co_slash = base.min(c.collateral_balance);
                        c.collateral_balance -= co_slash;
                        let op_slash = cfg.engine.operator_slash_fraction * base;
                        self.operators[oi].stake -= op_slash;
                        (0.0, co_slash + op_slash)
                    };
                    self.update_reputations(oi, Some(ci), success)?;
                    report.outcomes.push(TaskOutcome {
                        task_id: task.id,
                        operator_id: self.operators[oi].id,
                        coprocessor_id: Some(self.coprocessors[ci].id),
                        success,
                        reward_paid,
                        slash_applied,
                    });
                } else if self_exec.binary_search(&ti).is_ok() {
                    let p = success_probability(&self.operators[oi], None, task, &cfg.model);
                    let success = exec_rng.gen_bool(p.clamp(0.0, 1.0));
                    let (reward_paid, slash_applied) = if success {
                        self.operators[oi].cumulative_reward += task.reward;
                        (task.reward, 0.0)
                    } else {
                        let slash = cfg.slash_factor * task.base_penalty;
                        self.operators[oi].stake -= slash;
                        (0.0, slash)
                    };
                    self.update_reputations(oi, None, success)?;
                    report.outcomes.push(TaskOutcome {
                        task_id: task.id,
                        operator_id: self.operators[oi].id,
                        coprocessor_id: None,
                        success,
                        reward_paid,
                        slash_applied,
                    });
                }
            }

            for outcome in &report.outcomes {
                self.cumulative_reward_total += outcome.reward_paid;
                self.cumulative_slash_total += outcome.slash_applied;
            }
        }

        report.loads = self.coprocessors.iter().map(|c| c.load).collect();

        // (7) attrition: deactivation is permanent
        for op in &mut self.operators {
            if op.active && op.stake < self.config.deactivation_threshold {
                op.active = false;
            }
        }

        // (8) load decay toward 0
        let decay = self.config.engine.load_decay;
        for c in &mut self.coprocessors {
            c.load *= 1.0 - decay;
        }

        self.period += 1;
        Ok(report)
    }

    fn update_reputations(&mut self, oi: usize, ci: Option<usize>, success: bool) -> Result<()> {
        let rate = self.config.model.reputation_ema;
        let op = &mut self.operators[oi];
        let y = if success { 1.0 } else { 0.0 };
        op.reputation += rate * (y - op.reputation);
        if let Some(ci) = ci {
            let next = gas_update(self.gas_states[ci], success, &self.config.gas)?;
            self.gas_states[ci] = next;
            self.coprocessors[ci].gas_score = next.f;
        }
        Ok(())
    }

    pub fn active_operator_count(&self) -> u32 {
        self.operators.iter().filter(|o| o.active).count() as u32
    }

    /// Snapshot the metrics of the period described by `report`.
    pub fn frame(&self, report: &PeriodReport) -> MetricsFrame {
        let mut counts: std::collections::BTreeMap<(u64, u64), u64> =
            std::collections::BTreeMap::new();
        for outcome in &report.outcomes {
            if let Some(cid) = outcome.coprocessor_id {
                *counts.entry((outcome.operator_id, cid)).or_insert(0) += 1;
            }
        }
        MetricsFrame {
            period: report.period,
            active_operators: self.active_operator_count(),
            cumulative_reward_total: self.cumulative_reward_total,
            cumulative_slash_total: self.cumulative_slash_total,
            per_operator_reward: self.operators.iter().map(|o| o.cumulative_reward).collect(),
            per_coprocessor_load: report.loads.clone(),
            per_coprocessor_reward: self
                .coprocessors
                .iter()
                .map(|c| c.cumulative_reward)
                .collect(),
            per_coprocessor_reputation: self.coprocessors.iter().map(|c| c.reputation()).collect(),
            assignment_counts: counts.into_iter().collect(),
        }
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Run the full configured horizon and collect one frame per period.
pub fn run_simulation(config: SimulationConfig) -> Result<Vec<MetricsFrame>> {
    run_simulation_with(config, |_| {})
}

/// As [`run_simulation`], invoking `inspect` on every period report
/// (used by audits that need the raw ledger).
pub fn run_simulation_with(
    config: SimulationConfig,
    mut inspect: impl FnMut(&PeriodReport),
) -> Result<Vec<MetricsFrame>> {
    let mut sim = Simulation::new(config)?;
    let mut frames = Vec::with_capacity(config.periods as usize);
    for _ in 0..config.periods {
        let report = sim.step()?;
        inspect(&report);
        frames.push(sim.frame(&report));
    }
    Ok(frames)
}
