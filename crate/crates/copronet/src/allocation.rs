//! Expected-benefit task allocation: the per-operator assignment program
//! with an exhaustive oracle (`solve_exact`) and the production per-task
//! greedy (`solve_greedy`).
//!
//! The program has no cross-task coupling (each task carries its own
//! `sum_c x <= 1` constraint), so the per-task argmax is optimal; the
//! exhaustive solver exists as an independent check of that argument.

use std::collections::BTreeMap;

use crate::model::Task;
use crate::{Error, Result};

/// Default cap on the enumerated assignment space of [`solve_exact`].
pub const DEFAULT_EXACT_CAP: f64 = 1e6;

/// One coprocessor's offer for a task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub coprocessor_id: u64,
    /// Success probability p_{v,c,a}.
    pub p: f64,
    pub bid_price: f64,
    pub collateral: f64,
}

/// A per-operator allocation problem over that operator's auctionable tasks.
#[derive(Debug, Clone)]
pub struct AllocationInstance {
    pub tasks: Vec<Task>,
    /// candidates[i] are the offers for tasks[i].
    pub candidates: Vec<Vec<Candidate>>,
    pub slash_factor: f64,
    pub min_collateral: f64,
}

/// Selected coprocessor per task (None = left unassigned) and the
/// objective value of the selection.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationResult {
    pub selected: BTreeMap<u64, Option<u64>>,
    pub objective_value: f64,
}

/// Expected benefit of one execution: `reward * p - slash * (1 - p)`.
pub fn expected_benefit(reward: f64, slash: f64, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "success probability {p} outside [0,1]"
        )));
    }
    if reward < 0.0 || slash < 0.0 {
        return Err(Error::InvalidArgument(
            "reward and slash must be nonnegative".into(),
        ));
    }
    Ok(reward * p - slash * (1.0 - p))
}

/// Net value of a delegated execution: expected benefit minus the bid.
pub fn net_value(reward: f64, slash: f64, p: f64, bid: f64) -> Result<f64> {
    if bid < 0.0 {
        return Err(Error::InvalidArgument("bid must be nonnegative".into()));
    }
    Ok(expected_benefit(reward, slash, p)? - bid)
}

impl AllocationInstance {
    fn validate(&self) -> Result<()> {
        if self.tasks.len() != self.candidates.len() {
            return Err(Error::InvalidArgument(
                "tasks and candidates lists differ in length".into(),
            ));
        }
        for (task, cands) in self.tasks.iter().zip(&self.candidates) {
            task.validate()?;
            for c in cands {
                if !(0.0..=1.0).contains(&c.p) {
                    return Err(Error::InvalidArgument(format!(
                        "candidate p {} outside [0,1]",
                        c.p
                    )));
                }
                if c.bid_price < 0.0 || c.collateral < 0.0 {
                    return Err(Error::InvalidArgument(
                        "bid_price and collateral must be nonnegative".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Collateral-feasible candidates of task `i`, sorted by coprocessor id.
    fn feasible(&self, i: usize) -> Vec<Candidate> {
        let mut cands: Vec<Candidate> = self.candidates[i]
            .iter()
            .filter(|c| c.collateral >= self.min_collateral)
            .copied()
            .collect();
        cands.sort_by_key(|c| c.coprocessor_id);
        cands
    }

    fn candidate_net(&self, task: &Task, c: &Candidate) -> Result<f64> {
        net_value(
            task.reward,
            self.slash_factor * task.base_penalty,
            c.p,
            c.bid_price,
        )
    }
}

/// Exhaustive solver: enumerates every feasible binary assignment and
/// returns the maximizer. Ties break toward the lexicographically smallest
/// selection over (task_id, coprocessor_id), with "unassigned" ordered
/// before any coprocessor.
pub fn solve_exact(instance: &AllocationInstance) -> Result<AllocationResult> {
    solve_exact_capped(instance, DEFAULT_EXACT_CAP)
}

pub fn solve_exact_capped(instance: &AllocationInstance, cap: f64) -> Result<AllocationResult> {
    instance.validate()?;
    let mut order: Vec<usize> = (0..instance.tasks.len()).collect();
    order.sort_by_key(|&i| instance.tasks[i].id);

    let feasible: Vec<Vec<Candidate>> = order.iter().map(|&i| instance.feasible(i)).collect();
    let size: f64 = feasible.iter().map(|f| (f.len() + 1) as f64).product();
    if size > cap {
        return Err(Error::InstanceTooLarge { size, cap });
    }

    // Depth-first over tasks in id order, options ordered [None, c_0, c_1, ...]
    // (candidates ascending by id); the first assignment reaching the maximum
    // is therefore the lexicographic tie-break winner. Objectives are summed
    // in task-id order so they are bit-comparable with solve_greedy.
    let n = order.len();
    let mut choice = vec![0usize; n];
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut depth = 0usize;
    let mut nets = vec![0.0f64; n];
    loop {
        if depth == n {
            let objective = nets.iter().take(n).sum::<f64>();
            let better = match &best {
                None => true,
                Some((b, _)) => objective > *b,
            };
            if better {
                best = Some((objective, choice.clone()));
            }
            // backtrack
            loop {
                if depth == 0 {
                    let (objective_value, choice) = best.unwrap();
                    let mut selected = BTreeMap::new();
                    for (pos, &i) in order.iter().enumerate() {
                        let sel = match choice[pos] {
                            0 => None,
                            k => Some(feasible[pos][k - 1].coprocessor_id),
                        };
                        selected.insert(instance.tasks[i].id, sel);
                    }
                    return Ok(AllocationResult {
                        selected,
                        objective_value,
                    });
                }
                depth -= 1;
                if choice[depth] < feasible[depth].len() {
                    choice[depth] += 1;
                    break;
                }
                choice[depth] = 0;
            }
        }
        let i = order[depth];
        nets[depth] = match choice[depth] {
            0 => 0.0,
            k => instance.candidate_net(&instance.tasks[i], &feasible[depth][k - 1])?,
        };
        depth += 1;
    }
}

/// Per-task greedy: pick the collateral-feasible candidate with the largest
/// strictly positive net value, else leave the task unassigned. Optimal for
/// this program; matches solve_exact under the shared tie-break.
pub fn solve_greedy(instance: &AllocationInstance) -> Result<AllocationResult> {
    instance.validate()?;
    let mut order: Vec<usize> = (0..instance.tasks.len()).collect();
    order.sort_by_key(|&i| instance.tasks[i].id);

    let mut selected = BTreeMap::new();
    let mut objective_value = 0.0f64;
    for &i in &order {
        let task = &instance.tasks[i];
        let mut best: Option<(f64, u64)> = None;
        for c in instance.feasible(i) {
            let net = instance.candidate_net(task, &c)?;
            // Candidates are visited in ascending id order, so strict
            // improvement keeps the smallest id among ties.
            let better = match best {
                None => net > 0.0,
                Some((b, _)) => net > b,
            };
            if better {
                best = Some((net, c.coprocessor_id));
            }
        }
        match best {
            Some((net, id)) => {
                objective_value += net;
                selected.insert(task.id, Some(id));
            }
            None => {
                selected.insert(task.id, None);
            }
        }
    }
    Ok(AllocationResult {
        selected,
        objective_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task(id: u64, reward: f64, penalty: f64) -> Task {
        Task {
            id,
            difficulty: 1.0,
            reward,
            base_penalty: penalty,
            risk_factor: 0.0,
        }
    }

    fn cand(id: u64, p: f64, bid: f64, collateral: f64) -> Candidate {
        Candidate {
            coprocessor_id: id,
            p,
            bid_price: bid,
            collateral,
        }
    }

    #[test]
    fn expected_benefit_examples() {
        assert_eq!(expected_benefit(1.0, 0.5, 1.0).unwrap(), 1.0);
        assert_eq!(expected_benefit(1.0, 0.5, 0.0).unwrap(), -0.5);
        assert_eq!(expected_benefit(2.0, 1.0, 0.75).unwrap(), 1.25);
        assert!(expected_benefit(1.0, 0.5, 1.2).is_err());
    }

    #[test]
    fn net_value_examples() {
        assert_eq!(net_value(1.0, 0.5, 1.0, 0.3).unwrap(), 0.7);
        assert_eq!(net_value(1.0, 0.5, 0.0, 0.0).unwrap(), -0.5);
        assert_eq!(net_value(2.0, 1.0, 0.75, 1.25).unwrap(), 0.0);
    }

    #[test]
    fn exact_empty_instance() {
        let inst = AllocationInstance {
            tasks: vec![],
            candidates: vec![],
            slash_factor: 0.5,
            min_collateral: 0.0,
        };
        let res = solve_exact(&inst).unwrap();
        assert!(res.selected.is_empty());
        assert_eq!(res.objective_value, 0.0);
    }

    #[test]
    fn exact_skips_unprofitable_candidate() {
        // net = 1*0.1 - 1*0.9 - 0 < 0, so x = 0 dominates.
        let inst = AllocationInstance {
            tasks: vec![task(0, 1.0, 1.0)],
            candidates: vec![vec![cand(0, 0.1, 0.0, 1.0)]],
            slash_factor: 1.0,
            min_collateral: 0.0,
        };
        let res = solve_exact(&inst).unwrap();
        assert_eq!(res.selected[&0], None);
        assert_eq!(res.objective_value, 0.0);
    }

    #[test]
    fn greedy_respects_collateral_floor() {
        let inst = AllocationInstance {
            tasks: vec![task(0, 2.0, 0.0)],
            candidates: vec![vec![
                cand(0, 0.9, 0.1, 0.5), // best net but under-collateralized
                cand(1, 0.8, 0.5, 2.0),
            ]],
            slash_factor: 1.0,
            min_collateral: 1.0,
        };
        let res = solve_greedy(&inst).unwrap();
        assert_eq!(res.selected[&0], Some(1));
    }

    #[test]
    fn greedy_leaves_all_negative_tasks_unassigned() {
        let inst = AllocationInstance {
            tasks: vec![task(0, 0.1, 1.0)],
            candidates: vec![vec![cand(0, 0.5, 0.2, 1.0), cand(1, 0.6, 0.4, 1.0)]],
            slash_factor: 1.0,
            min_collateral: 0.0,
        };
        let res = solve_greedy(&inst).unwrap();
        assert_eq!(res.selected[&0], None);
        assert_eq!(res.objective_value, 0.0);
    }

    #[test]
    fn exact_rejects_oversized_instance() {
        let tasks: Vec<Task> = (0..8).map(|i| task(i, 1.0, 0.0)).collect();
        let candidates = vec![
            (0..9)
                .map(|i| cand(i, 0.5, 0.0, 1.0))
                .collect::<Vec<_>>();
            8
        ];
        let inst = AllocationInstance {
            tasks,
            candidates,
            slash_factor: 0.0,
            min_collateral: 0.0,
        };
        // 10^8 assignments > 10^6 cap
        assert!(matches!(
            solve_exact(&inst),
            Err(Error::InstanceTooLarge { .. })
        ));
    }

    // Independent enumeration oracle, distinct from solve_exact's DFS:
    // counts through the mixed-radix space of per-task choices.
    fn brute_force(inst: &AllocationInstance) -> f64 {
        let mut order: Vec<usize> = (0..inst.tasks.len()).collect();
        order.sort_by_key(|&i| inst.tasks[i].id);
        let feasible: Vec<Vec<Candidate>> = order.iter().map(|&i| inst.feasible(i)).collect();
        let radix: Vec<usize> = feasible.iter().map(|f| f.len() + 1).collect();
        let total: usize = radix.iter().product();
        let mut best = f64::NEG_INFINITY;
        for mut code in 0..total {
            let mut obj = 0.0;
            for (pos, &i) in order.iter().enumerate() {
                let k = code % radix[pos];
                code /= radix[pos];
                if k > 0 {
                    obj += inst
                        .candidate_net(&inst.tasks[i], &feasible[pos][k - 1])
                        .unwrap();
                }
            }
            if obj > best {
                best = obj;
            }
        }
        best
    }

    #[test]
    fn exact_matches_independent_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n_tasks = rng.gen_range(0..=3);
            let tasks: Vec<Task> = (0..n_tasks)
                .map(|i| task(i, rng.gen_range(0.0..3.0), rng.gen_range(0.0..2.0)))
                .collect();
            let candidates: Vec<Vec<Candidate>> = (0..n_tasks)
                .map(|_| {
                    (0..rng.gen_range(0..=4))
                        .map(|id| {
                            cand(
                                id,
                                rng.gen_range(0.0..1.0),
                                rng.gen_range(0.0..1.5),
                                rng.gen_range(0.0..2.0),
                            )
                        })
                        .collect()
                })
                .collect();
            let inst = AllocationInstance {
                tasks,
                candidates,
                slash_factor: rng.gen_range(0.0..1.0),
                min_collateral: rng.gen_range(0.0..1.0),
            };
            let exact = solve_exact(&inst).unwrap();
            let oracle = brute_force(&inst).max(0.0);
            assert!(
                (exact.objective_value - oracle).abs() < 1e-12,
                "exact {} vs oracle {}",
                exact.objective_value,
                oracle
            );
        }
    }

    #[test]
    fn objective_consistent_with_selection() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let n_tasks = rng.gen_range(1..=4);
            let tasks: Vec<Task> = (0..n_tasks)
                .map(|i| task(i, rng.gen_range(0.0..3.0), rng.gen_range(0.0..2.0)))
                .collect();
            let candidates: Vec<Vec<Candidate>> = (0..n_tasks)
                .map(|_| {
                    (0..rng.gen_range(0..=4))
                        .map(|id| {
                            cand(id, rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.5), 1.0)
                        })
                        .collect()
                })
                .collect();
            let inst = AllocationInstance {
                tasks: tasks.clone(),
                candidates: candidates.clone(),
                slash_factor: 0.3,
                min_collateral: 0.5,
            };
            let res = solve_greedy(&inst).unwrap();
            let mut recomputed = 0.0;
            for (i, t) in tasks.iter().enumerate() {
                if let Some(Some(cid)) = res.selected.get(&t.id) {
                    let c = candidates[i]
                        .iter()
                        .find(|c| c.coprocessor_id == *cid)
                        .unwrap();
                    assert!(c.collateral >= inst.min_collateral);
                    recomputed += inst.candidate_net(t, c).unwrap();
                }
            }
            assert!((recomputed - res.objective_value).abs() < 1e-12);
        }
    }
}
