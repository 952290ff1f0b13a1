// Copyright (c) The HammerHead Simulator Authors
// SPDX-License-Identifier: Apache-2.0

//! Reputation scoring and schedule construction.
//!
//! A validator earns one point for every vertex whose parents include the
//! leader vertex of the preceding anchor round. When an epoch ends, the
//! lowest scorers (the bad set, bounded by the fault stake) lose every slot
//! they hold, and those slots are handed round-robin to an equally sized set
//! of top scorers (the good set).

use alloc::{collections::BTreeSet, vec::Vec};

use rand::{seq::SliceRandom, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::{
    committee::{Committee, Stake, ValidatorId},
    dag::{DagState, VertexId},
    schedule::{Schedule, ScheduleBook, ScheduleError},
    Round,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReputationError {
    #[error("schedule length must be positive")]
    BadLength,
    #[error("committee of {0} validators is too small to exclude anyone")]
    DegenerateCommittee(usize),
    #[error("scores belong to epoch {scores} but schedule is epoch {schedule}")]
    EpochMismatch { scores: u64, schedule: u64 },
    #[error("anchor round {anchor} is before the switch round {due}")]
    PrematureSwitch { anchor: Round, due: Round },
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

/// Parameters of the schedule-switch rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReputationParams {
    /// Minimum round distance between a schedule's first round and the
    /// anchor that ends it.
    pub switch_interval: Round,
    /// Upper bound on the stake share of the bad set, on top of the fault
    /// stake bound.
    pub exclusion_fraction: f64,
}

impl Default for ReputationParams {
    fn default() -> Self {
        Self {
            switch_interval: 10,
            exclusion_fraction: 0.33,
        }
    }
}

/// Per-validator points accumulated over one epoch's scoring window.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReputationScores {
    pub epoch: u64,
    pub points: Vec<u64>,
}

impl ReputationScores {
    pub fn zero(committee: &Committee, epoch: u64) -> Self {
        Self {
            epoch,
            points: alloc::vec![0; committee.size()],
        }
    }

    pub fn get(&self, id: ValidatorId) -> u64 {
        self.points[id.index()]
    }
}

/// Slot counts per validator before and after a swap.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SwapTable {
    pub rows: Vec<(u64, u64)>,
}

impl SwapTable {
    fn from_schedule(committee: &Committee, prev: &Schedule) -> Self {
        let mut rows = alloc::vec![(0u64, 0u64); committee.size()];
        for s in &prev.slots {
            rows[s.index()].0 += 1;
            rows[s.index()].1 += 1;
        }
        Self { rows }
    }

    pub fn before(&self, id: ValidatorId) -> u64 {
        self.rows[id.index()].0
    }

    pub fn after(&self, id: ValidatorId) -> u64 {
        self.rows[id.index()].1
    }
}

/// Outcome of a schedule switch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScheduleSwap {
    pub schedule: Schedule,
    pub scores: ReputationScores,
    pub table: SwapTable,
    pub bad: Vec<ValidatorId>,
    pub good: Vec<ValidatorId>,
}

/// Largest-remainder apportionment of `len` slots proportional to stake.
pub fn slot_counts(committee: &Committee, len: usize) -> Vec<usize> {
    let total = committee.total_stake() as u128;
    let len_w = len as u128;
    let mut counts: Vec<usize> = committee
        .stakes()
        .iter()
        .map(|s| (len_w * *s as u128 / total) as usize)
        .collect();
    let assigned: usize = counts.iter().sum();
    let mut by_remainder: Vec<(u128, usize)> = committee
        .stakes()
        .iter()
        .enumerate()
        .map(|(i, s)| (len_w * *s as u128 % total, i))
        .collect();
    // largest remainder first, lower id on ties
    by_remainder.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for (_, i) in by_remainder.into_iter().take(len - assigned) {
        counts[i] += 1;
    }
    counts
}

/// Epoch-0 schedule: stake-proportional slot counts, shuffled by `seed`.
pub fn initial_schedule(
    committee: &Committee,
    seed: u64,
    len: usize,
) -> Result<Schedule, ReputationError> {
    if len == 0 {
        return Err(ReputationError::BadLength);
    }
    let mut slots = Vec::with_capacity(len);
    for (id, count) in committee.members().zip(slot_counts(committee, len)) {
        slots.extend(core::iter::repeat_n(id, count));
    }
    slots.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(Schedule::new(0, 0, slots)?)
}

/// Scores votes for the leaders of even rounds in `[from, to)`, counting only
/// voters inside the causal history of `trigger`.
pub fn compute_scores(
    dag: &DagState,
    book: &ScheduleBook,
    from: Round,
    to: Round,
    trigger: &VertexId,
    epoch: u64,
) -> ReputationScores {
    let mut scores = ReputationScores::zero(dag.committee(), epoch);
    if from >= to {
        return scores;
    }
    let history = dag.reachable_from(trigger, from.saturating_add(1));
    let first = from + from % 2;
    for round in (first..to).step_by(2) {
        let Ok(leader) = book.leader(round) else {
            continue;
        };
        let target = VertexId::new(round, leader);
        for voter in dag.round(round + 1) {
            if voter.edges.contains(&target) && history.contains(&voter.id) {
                scores.points[voter.source().index()] += 1;
            }
        }
    }
    scores
}

fn stake_bound(committee: &Committee, exclusion_fraction: f64) -> Stake {
    let by_fraction = (exclusion_fraction.max(0.0) * committee.total_stake() as f64) as Stake;
    committee.fault_stake_bound().min(by_fraction)
}

/// Bad set (ascending score, higher id first among equals) and good set
/// (descending score, lower id first among equals) of equal size.
pub fn select_bad_and_good(
    scores: &ReputationScores,
    committee: &Committee,
    exclusion_fraction: f64,
) -> (Vec<ValidatorId>, Vec<ValidatorId>) {
    let bound = stake_bound(committee, exclusion_fraction);
    let mut ascending: Vec<ValidatorId> = committee.members().collect();
    ascending.sort_by(|a, b| scores.get(*a).cmp(&scores.get(*b)).then(b.cmp(a)));

    let mut bad = Vec::new();
    let mut used: Stake = 0;
    for id in &ascending {
        let stake = committee.stake(*id);
        if used + stake > bound {
            break;
        }
        used += stake;
        bad.push(*id);
    }

    let excluded: BTreeSet<ValidatorId> = bad.iter().copied().collect();
    let mut descending: Vec<ValidatorId> = committee
        .members()
        .filter(|id| !excluded.contains(id))
        .collect();
    descending.sort_by(|a, b| scores.get(*b).cmp(&scores.get(*a)).then(a.cmp(b)));
    descending.truncate(bad.len());
    bad.truncate(descending.len());
    (bad, descending)
}

pub fn build_next_schedule(
    prev: &Schedule,
    scores: &ReputationScores,
    committee: &Committee,
    exclusion_fraction: f64,
    initial_round: Round,
) -> Result<ScheduleSwap, ReputationError> {
    if scores.epoch != prev.epoch {
        return Err(ReputationError::EpochMismatch {
            scores: scores.epoch,
            schedule: prev.epoch,
        });
    }
    if committee.size() < 4 {
        return Err(ReputationError::DegenerateCommittee(committee.size()));
    }
    let (bad, good) = select_bad_and_good(scores, committee, exclusion_fraction);
    let mut table = SwapTable::from_schedule(committee, prev);
    let mut slots = prev.slots.clone();
    let mut next_good = good.iter().cycle();
    for slot in slots.iter_mut() {
        if bad.contains(slot) {
            let g = *next_good.next().expect("good set matches bad set size");
            table.rows[g.index()].1 += 1;
            table.rows[slot.index()].1 -= 1;
            *slot = g;
        }
    }
    Ok(ScheduleSwap {
        schedule: Schedule::new(prev.epoch + 1, initial_round, slots)?,
        scores: scores.clone(),
        table,
        bad,
        good,
    })
}

/// Scores the active epoch up to (excluding) `anchor` and derives the next
/// schedule, effective from the following anchor round.
pub fn update_schedule(
    book: &ScheduleBook,
    dag: &DagState,
    anchor: &VertexId,
    params: &ReputationParams,
) -> Result<ScheduleSwap, ReputationError> {
    let active = book.active();
    let due = active.initial_round.saturating_add(params.switch_interval);
    if anchor.round < due {
        return Err(ReputationError::PrematureSwitch {
            anchor: anchor.round,
            due,
        });
    }
    let committee = dag.committee();
    let scores = compute_scores(
        dag,
        book,
        active.initial_round,
        anchor.round,
        anchor,
        active.epoch,
    );
    let initial_round = anchor.round + 2;
    match build_next_schedule(
        active,
        &scores,
        committee,
        params.exclusion_fraction,
        initial_round,
    ) {
        Err(ReputationError::DegenerateCommittee(_)) => {
            let table = SwapTable::from_schedule(committee, active);
            Ok(ScheduleSwap {
                schedule: Schedule::new(active.epoch + 1, initial_round, active.slots.clone())?,
                scores,
                table,
                bad: Vec::new(),
                good: Vec::new(),
            })
        }
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dag::{Block, Vertex};

    const A: ValidatorId = ValidatorId(0);
    const B: ValidatorId = ValidatorId(1);
    const C: ValidatorId = ValidatorId(2);
    const D: ValidatorId = ValidatorId(3);

    fn scores(points: &[u64]) -> ReputationScores {
        ReputationScores {
            epoch: 0,
            points: points.to_vec(),
        }
    }

    #[test]
    fn equal_stake_one_slot_each() {
        let c = Committee::equal(4).unwrap();
        let s = initial_schedule(&c, 0, 4).unwrap();
        for id in c.members() {
            assert_eq!(s.slot_count(id), 1);
        }
        assert_eq!((s.epoch, s.initial_round), (0, 0));
    }

    #[test]
    fn largest_remainder_apportionment() {
        let c = Committee::new(&[2, 1, 1]).unwrap();
        assert_eq!(slot_counts(&c, 4), alloc::vec![2, 1, 1]);
        let c = Committee::new(&[1, 1, 1]).unwrap();
        // 7/3 each, remainder 1 goes to the lowest id
        assert_eq!(slot_counts(&c, 7), alloc::vec![3, 2, 2]);
        let s = initial_schedule(&Committee::new(&[2, 1, 1]).unwrap(), 9, 4).unwrap();
        assert_eq!(s.slot_count(A), 2);
    }

    #[test]
    fn initial_schedule_is_deterministic() {
        let c = Committee::equal(10).unwrap();
        assert_eq!(initial_schedule(&c, 7, 30), initial_schedule(&c, 7, 30));
        assert_eq!(initial_schedule(&c, 7, 0), Err(ReputationError::BadLength));
    }

    #[test]
    fn swap_lowest_for_highest() {
        let c = Committee::equal(4).unwrap();
        let prev = Schedule::new(0, 0, alloc::vec![A, B, C, D]).unwrap();
        let swap = build_next_schedule(&prev, &scores(&[5, 5, 5, 0]), &c, 0.33, 12).unwrap();
        assert_eq!(swap.bad, alloc::vec![D]);
        assert_eq!(swap.good, alloc::vec![A]);
        assert_eq!(swap.schedule.slots, alloc::vec![A, B, C, A]);
        assert_eq!((swap.schedule.epoch, swap.schedule.initial_round), (1, 12));
        assert_eq!(swap.table.rows, alloc::vec![(1, 2), (1, 1), (1, 1), (1, 0)]);
    }

    #[test]
    fn tie_rule_on_equal_scores() {
        let c = Committee::equal(4).unwrap();
        let prev = Schedule::new(0, 0, alloc::vec![A, B, C, D]).unwrap();
        let swap = build_next_schedule(&prev, &scores(&[3, 3, 3, 3]), &c, 0.33, 2).unwrap();
        assert_eq!(swap.bad, alloc::vec![D]);
        assert_eq!(swap.good, alloc::vec![A]);
        assert_eq!(swap.schedule.slots, alloc::vec![A, B, C, A]);
    }

    #[test]
    fn bad_validator_without_slots() {
        let c = Committee::equal(4).unwrap();
        let prev = Schedule::new(1, 0, alloc::vec![A, B, C, A]).unwrap();
        let mut sc = scores(&[5, 5, 5, 0]);
        sc.epoch = 1;
        let swap = build_next_schedule(&prev, &sc, &c, 0.33, 2).unwrap();
        assert_eq!(swap.schedule.slots, prev.slots);
        assert_eq!(swap.table.rows[D.index()], (0, 0));
        assert_eq!(swap.table.rows[A.index()], (2, 2));
    }

    #[test]
    fn three_bad_round_robin_over_good() {
        let c = Committee::equal(10).unwrap();
        let prev = Schedule::round_robin(10);
        let pts = [9, 9, 9, 8, 8, 8, 8, 0, 0, 1];
        let swap = build_next_schedule(&prev, &scores(&pts), &c, 0.33, 2).unwrap();
        assert_eq!(
            swap.bad,
            alloc::vec![ValidatorId(8), ValidatorId(7), ValidatorId(9)]
        );
        assert_eq!(swap.good, alloc::vec![A, B, C]);
        // slots 7, 8, 9 replaced in slot order by A, B, C
        assert_eq!(&swap.schedule.slots[7..], &[A, B, C]);
        // a 20% cap admits only two
        let swap = build_next_schedule(&prev, &scores(&pts), &c, 0.20, 2).unwrap();
        assert_eq!(swap.bad.len(), 2);
    }

    #[test]
    fn stake_weighted_bad_set() {
        // total 9, fault bound 2: the stake-3 validator can never be excluded
        let c = Committee::new(&[3, 1, 1, 1, 1, 1, 1]).unwrap();
        let (bad, good) = select_bad_and_good(&scores(&[0, 5, 5, 5, 5, 5, 5]), &c, 0.33);
        assert!(bad.is_empty() && good.is_empty());
        let (bad, _) = select_bad_and_good(&scores(&[9, 0, 5, 5, 5, 5, 0]), &c, 0.33);
        assert_eq!(bad, alloc::vec![ValidatorId(6), ValidatorId(1)]);
    }

    #[test]
    fn degenerate_and_mismatch() {
        let c = Committee::equal(3).unwrap();
        let prev = Schedule::round_robin(3);
        assert_eq!(
            build_next_schedule(&prev, &scores(&[0, 0, 0]), &c, 0.33, 2),
            Err(ReputationError::DegenerateCommittee(3))
        );
        let c = Committee::equal(4).unwrap();
        let mut sc = scores(&[0; 4]);
        sc.epoch = 3;
        assert!(matches!(
            build_next_schedule(&Schedule::round_robin(4), &sc, &c, 0.33, 2),
            Err(ReputationError::EpochMismatch { .. })
        ));
    }

    fn full_dag(rounds: Round, alive: &[u32]) -> DagState {
        let mut dag = DagState::new(Committee::equal(4).unwrap());
        for s in alive {
            dag.insert(Vertex::genesis(ValidatorId(*s))).unwrap();
        }
        for r in 1..=rounds {
            for s in alive {
                dag.insert(Vertex {
                    id: VertexId::new(r, ValidatorId(*s)),
                    block: Block::default(),
                    edges: alive
                        .iter()
                        .map(|p| VertexId::new(r - 1, ValidatorId(*p)))
                        .collect(),
                })
                .unwrap();
            }
        }
        dag
    }

    #[test]
    fn scores_on_full_dag() {
        let dag = full_dag(4, &[0, 1, 2, 3]);
        let book = ScheduleBook::new(Schedule::round_robin(4));
        let trigger = VertexId::new(4, A);
        let s = compute_scores(&dag, &book, 0, 4, &trigger, 0);
        assert_eq!(s.points, alloc::vec![2, 2, 2, 2]);
        let empty = compute_scores(&dag, &book, 4, 4, &trigger, 0);
        assert_eq!(empty.points, alloc::vec![0; 4]);
    }

    #[test]
    fn crashed_validator_scores_zero() {
        let dag = full_dag(4, &[0, 1, 2]);
        let book = ScheduleBook::new(Schedule::round_robin(4));
        let s = compute_scores(&dag, &book, 0, 4, &VertexId::new(4, A), 0);
        // leaders: r0 = A (present), r2 = C (present)
        assert_eq!(s.points, alloc::vec![2, 2, 2, 0]);
    }

    #[test]
    fn update_guard_and_reassignment() {
        let dag = full_dag(4, &[0, 1, 2]);
        let book = ScheduleBook::new(Schedule::round_robin(4));
        let params = ReputationParams {
            switch_interval: 6,
            exclusion_fraction: 0.33,
        };
        assert_eq!(
            update_schedule(&book, &dag, &VertexId::new(4, A), &params),
            Err(ReputationError::PrematureSwitch { anchor: 4, due: 6 })
        );
        let params = ReputationParams {
            switch_interval: 4,
            exclusion_fraction: 0.33,
        };
        let swap = update_schedule(&book, &dag, &VertexId::new(4, A), &params).unwrap();
        assert_eq!(swap.schedule.slots, alloc::vec![A, B, C, A]);
        assert_eq!(swap.schedule.initial_round, 6);
        assert_eq!(swap.schedule.slot_count(D), 0);
    }
}
