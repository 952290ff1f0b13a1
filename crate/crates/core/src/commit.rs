// Copyright (c) The HammerHead Simulator Authors
// SPDX-License-Identifier: Apache-2.0

//! Ordering engine: direct anchor commits, back-chaining to earlier anchors,
//! deterministic ordering of causal histories, and schedule switches.
//!
//! A schedule switch is triggered while draining the anchor stack, by the
//! first anchor at least `switch_interval` rounds past the active schedule's
//! first round. That anchor and its history are ordered under the old
//! schedule; the new schedule governs every anchor round after it. Anchors
//! still stacked above the trigger were elected under the old schedule, so
//! they are dropped and the ordering frontier is rewound to the trigger;
//! [`CommitState::retro_recheck`] then re-derives commits under the new
//! schedule from the vertices already held.

use alloc::{collections::BTreeSet, vec::Vec};

use crate::{
    committee::ValidatorId,
    dag::{get_anchor, DagState, PathCache, Vertex, VertexId},
    reputation::{update_schedule, ReputationParams, ScheduleSwap},
    schedule::{Schedule, ScheduleBook},
    Round,
};

/// One ordered vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CommitEntry {
    pub seq: u64,
    pub id: VertexId,
    pub anchor_round: Round,
}

/// Side effects recorded by the engine, drained by the caller for tracing.
#[derive(Clone, Debug, PartialEq)]
pub enum CommitEvent {
    AnchorCommitted {
        round: Round,
        leader: ValidatorId,
        direct: bool,
    },
    VertexOrdered(CommitEntry),
    ScheduleSwitched(ScheduleSwap),
    StaleAnchor {
        round: Round,
    },
}

#[derive(Clone, Debug)]
pub struct CommitState {
    book: ScheduleBook,
    params: Option<ReputationParams>,
    ordered: BTreeSet<VertexId>,
    last_ordered_round: Option<Round>,
    stack: Vec<(VertexId, bool)>,
    log: Vec<CommitEntry>,
    switched: bool,
    events: Vec<CommitEvent>,
}

impl CommitState {
    /// `params = None` keeps `initial` forever (static rotation baseline).
    pub fn new(initial: Schedule, params: Option<ReputationParams>) -> Self {
        Self {
            book: ScheduleBook::new(initial),
            params,
            ordered: BTreeSet::new(),
            last_ordered_round: None,
            stack: Vec::new(),
            log: Vec::new(),
            switched: false,
            events: Vec::new(),
        }
    }

    pub fn book(&self) -> &ScheduleBook {
        &self.book
    }

    pub fn active_schedule(&self) -> &Schedule {
        self.book.active()
    }

    pub fn log(&self) -> &[CommitEntry] {
        &self.log
    }

    pub fn is_ordered(&self, id: &VertexId) -> bool {
        self.ordered.contains(id)
    }

    /// Round of the latest ordered anchor; `None` before the first commit.
    pub fn last_ordered_round(&self) -> Option<Round> {
        self.last_ordered_round
    }

    pub fn take_events(&mut self) -> Vec<CommitEvent> {
        core::mem::take(&mut self.events)
    }

    fn is_stale(&self, round: Round) -> bool {
        self.last_ordered_round.is_some_and(|last| round <= last)
    }

    /// Records an anchor that gathered votes after a later anchor was ordered
    /// without reaching it.
    fn note_stale(&mut self, anchor: VertexId) {
        if !self.ordered.contains(&anchor) {
            self.events.push(CommitEvent::StaleAnchor {
                round: anchor.round,
            });
        }
    }

    /// Commits the anchor two rounds below `v` if at least `f + 1` of `v`'s
    /// parents reach it. Returns the committed anchor round.
    pub fn try_committing(&mut self, dag: &DagState, v: &Vertex) -> Option<Round> {
        if v.round() % 2 == 1 || v.round() == 0 {
            return None;
        }
        let round = v.round() - 2;
        let anchor = get_anchor(dag, round, &self.book).ok().flatten()?.id;
        let mut cache = PathCache::new();
        let votes = v
            .edges
            .iter()
            .filter(|e| cache.path(dag, e, &anchor))
            .count();
        if votes < dag.committee().validity() {
            return None;
        }
        if self.is_stale(round) {
            self.note_stale(anchor);
            return None;
        }
        self.order_anchors(dag, anchor);
        Some(round)
    }

    /// Stacks `anchor` and every earlier uncommitted anchor reachable through
    /// the chain, then orders them oldest first.
    pub fn order_anchors(&mut self, dag: &DagState, anchor: VertexId) {
        if self.is_stale(anchor.round) {
            self.note_stale(anchor);
            return;
        }
        self.stack.push((anchor, true));
        let mut current = anchor;
        let mut cache = PathCache::new();
        let mut round = anchor.round;
        while round >= 2 && !self.is_stale(round - 2) {
            round -= 2;
            let Ok(Some(prev)) = get_anchor(dag, round, &self.book) else {
                continue;
            };
            if cache.path(dag, &current, &prev.id) {
                self.stack.push((prev.id, false));
                current = prev.id;
            }
        }
        self.last_ordered_round = Some(anchor.round);
        self.order_history(dag);
    }

    /// Drains the anchor stack, ordering each anchor's not-yet-ordered causal
    /// history by (round, source). Returns the newly ordered vertices.
    pub fn order_history(&mut self, dag: &DagState) -> Vec<VertexId> {
        let mut newly = Vec::new();
        while let Some((anchor, direct)) = self.stack.pop() {
            if self.book.leader(anchor.round) != Ok(anchor.source) {
                continue;
            }
            let history = dag.causal_history(&anchor, |id| self.ordered.contains(id));
            for id in history {
                let entry = CommitEntry {
                    seq: self.log.len() as u64,
                    id,
                    anchor_round: anchor.round,
                };
                self.ordered.insert(id);
                self.log.push(entry);
                self.events.push(CommitEvent::VertexOrdered(entry));
                newly.push(id);
            }
            self.events.push(CommitEvent::AnchorCommitted {
                round: anchor.round,
                leader: anchor.source,
                direct,
            });

            let Some(params) = self.params else { continue };
            if self
                .book
                .active()
                .initial_round
                .saturating_add(params.switch_interval)
                <= anchor.round
            {
                let swap = update_schedule(&self.book, dag, &anchor, &params)
                    .expect("switch condition checked above");
                self.book
                    .push(swap.schedule.clone())
                    .expect("successor schedule starts after the trigger");
                self.events.push(CommitEvent::ScheduleSwitched(swap));
                self.stack.clear();
                self.last_ordered_round = Some(anchor.round);
                self.switched = true;
            }
        }
        newly
    }

    /// After a schedule switch, re-runs the direct commit rule over every
    /// held even-round vertex the new schedule may affect. Restarts whenever
    /// a recheck itself switches schedules. Returns committed anchor rounds
    /// in ascending order.
    pub fn retro_recheck(&mut self, dag: &DagState) -> Vec<Round> {
        let mut committed = Vec::new();
        'restart: while core::mem::take(&mut self.switched) {
            let Some(highest) = dag.highest_round() else {
                break;
            };
            let mut round = self.book.active().initial_round;
            while round <= highest {
                let candidates: Vec<VertexId> = dag.round(round).map(|v| v.id).collect();
                for id in candidates {
                    let v = dag.get(&id).expect("listed from dag");
                    if let Some(r) = self.try_committing(dag, v) {
                        committed.push(r);
                        if self.switched {
                            continue 'restart;
                        }
                    }
                }
                round += 2;
            }
        }
        committed
    }

    /// Entry point for a freshly inserted vertex: commit rule plus any
    /// rechecks caused by schedule switches.
    pub fn process(&mut self, dag: &DagState, v: &Vertex) -> Vec<Round> {
        let mut committed: Vec<Round> = self.try_committing(dag, v).into_iter().collect();
        committed.extend(self.retro_recheck(dag));
        committed
    }
}
