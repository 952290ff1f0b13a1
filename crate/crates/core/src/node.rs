// Copyright (c) The HammerHead Simulator Authors
// SPDX-License-Identifier: Apache-2.0

//! Validator state machine. Each call handles one event to completion:
//! delivery, insertion (with buffering of vertices whose parents are still
//! missing), commit, and round advancement.

use alloc::{
    collections::{BTreeMap, VecDeque},
    vec::Vec,
};

use crate::{
    commit::{CommitEvent, CommitState},
    committee::{Committee, ValidatorId},
    dag::{Block, DagError, DagState, Transaction, Vertex, VertexId},
    reputation::ReputationParams,
    schedule::Schedule,
    trace::{TraceKind, TraceRecord},
    Round, Time,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeConfig {
    pub leader_timeout: Time,
    pub batch_size: usize,
    /// No vertices are created above this round.
    pub max_round: Option<Round>,
    /// No vertices are created at or after this time.
    pub stop_time: Option<Time>,
}

/// Requests from a node to the network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action {
    /// Send a vertex this node created to every peer.
    Broadcast(Vertex),
    /// Re-forward a vertex received for the first time.
    Echo(Vertex),
    /// Wake the node at `at` with timer `id`.
    SetTimer { at: Time, id: u64 },
}

#[derive(Clone, Debug)]
pub struct Node {
    me: ValidatorId,
    config: NodeConfig,
    dag: DagState,
    commit: CommitState,
    current_round: Round,
    started: bool,
    pending: BTreeMap<VertexId, Vertex>,
    tx_queue: VecDeque<Transaction>,
    leader_wait: Option<(Round, Time)>,
    crashed: bool,
    trace: Vec<TraceRecord>,
}

impl Node {
    pub fn new(
        me: ValidatorId,
        committee: Committee,
        schedule: Schedule,
        reputation: Option<ReputationParams>,
        config: NodeConfig,
    ) -> Self {
        Self {
            me,
            config,
            dag: DagState::new(committee),
            commit: CommitState::new(schedule, reputation),
            current_round: 0,
            started: false,
            pending: BTreeMap::new(),
            tx_queue: VecDeque::new(),
            leader_wait: None,
            crashed: false,
            trace: Vec::new(),
        }
    }

    pub fn id(&self) -> ValidatorId {
        self.me
    }

    pub fn dag(&self) -> &DagState {
        &self.dag
    }

    pub fn commit(&self) -> &CommitState {
        &self.commit
    }

    pub fn current_round(&self) -> Round {
        self.current_round
    }

    pub fn is_crashed(&self) -> bool {
        self.crashed
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    pub fn tx_queue_len(&self) -> usize {
        self.tx_queue.len()
    }

    pub fn leader_wait_deadline(&self) -> Option<Time> {
        self.leader_wait.map(|(_, at)| at)
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn into_trace(self) -> Vec<TraceRecord> {
        self.trace
    }

    fn record(&mut self, at: Time, kind: TraceKind) {
        self.trace.push(TraceRecord {
            node: self.me,
            at,
            kind,
        });
    }

    pub fn submit(&mut self, tx: Transaction) {
        if !self.crashed {
            self.tx_queue.push_back(tx);
        }
    }

    pub fn crash(&mut self, now: Time) {
        if !self.crashed {
            self.crashed = true;
            self.leader_wait = None;
            self.record(now, TraceKind::Crashed);
        }
    }

    /// Creates and broadcasts the genesis vertex.
    pub fn start(&mut self, now: Time) -> Vec<Action> {
        if self.crashed || self.started {
            return Vec::new();
        }
        self.started = true;
        let genesis = self.create_vertex(0, now);
        let mut actions = alloc::vec![Action::Broadcast(genesis)];
        actions.extend(self.try_advance_round(now));
        actions
    }

    pub fn on_deliver(&mut self, v: &Vertex, now: Time) -> Vec<Action> {
        if self.crashed || self.dag.contains(&v.id) || self.pending.contains_key(&v.id) {
            return Vec::new();
        }
        if v.validate(self.dag.committee()).is_err() {
            return Vec::new();
        }
        self.record(now, TraceKind::VertexDelivered { id: v.id });
        let mut actions = Vec::new();
        if v.source() != self.me {
            actions.push(Action::Echo(v.clone()));
        }
        for inserted in self.insert_or_buffer(v.clone()) {
            self.after_insert(&inserted, now);
        }
        actions.extend(self.try_advance_round(now));
        actions
    }

    pub fn on_timer(&mut self, id: u64, now: Time) -> Vec<Action> {
        if self.crashed || self.leader_wait.map(|(r, _)| r) != Some(id) {
            return Vec::new();
        }
        self.try_advance_round(now)
    }

    /// Inserts `v`, or buffers it if a parent is missing, then drains every
    /// buffered vertex that became insertable. Returns inserted ids in
    /// insertion order.
    fn insert_or_buffer(&mut self, v: Vertex) -> Vec<VertexId> {
        let id = v.id;
        match self.dag.insert(v.clone()) {
            Ok(()) => {}
            Err(DagError::MissingParents(..)) => {
                self.pending.insert(id, v);
                return Vec::new();
            }
            Err(_) => return Vec::new(),
        }
        let mut inserted = alloc::vec![id];
        loop {
            let ready: Vec<VertexId> = self
                .pending
                .values()
                .filter(|p| self.dag.missing_parents(p).is_empty())
                .map(|p| p.id)
                .collect();
            if ready.is_empty() {
                break;
            }
            for id in ready {
                let p = self.pending.remove(&id).expect("listed from pending");
                if self.dag.insert(p).is_ok() {
                    inserted.push(id);
                }
            }
        }
        inserted
    }

    fn after_insert(&mut self, id: &VertexId, now: Time) {
        if id.round < 2 || id.round % 2 == 1 {
            return;
        }
        let v = self.dag.get(id).expect("just inserted").clone();
        self.commit.process(&self.dag, &v);
        for event in self.commit.take_events() {
            let kind = match event {
                CommitEvent::AnchorCommitted {
                    round,
                    leader,
                    direct,
                } => TraceKind::AnchorCommitted {
                    round,
                    leader,
                    direct,
                },
                CommitEvent::VertexOrdered(e) => TraceKind::VertexOrdered {
                    id: e.id,
                    seq: e.seq,
                },
                CommitEvent::ScheduleSwitched(swap) => TraceKind::ScheduleSwitched {
                    epoch: swap.schedule.epoch,
                    initial_round: swap.schedule.initial_round,
                    slots: swap.schedule.slots,
                    scores: swap.scores.points,
                },
                CommitEvent::StaleAnchor { round } => TraceKind::StaleAnchor { round },
            };
            self.record(now, kind);
        }
    }

    fn may_propose(&self, now: Time) -> bool {
        !self.crashed
            && self
                .config
                .max_round
                .is_none_or(|max| self.current_round < max)
            && self.config.stop_time.is_none_or(|stop| now < stop)
    }

    /// Moves to the next round once `n - f` vertices of the current round are
    /// held, waiting for the leader at even rounds until its deadline.
    pub fn try_advance_round(&mut self, now: Time) -> Vec<Action> {
        let mut actions = Vec::new();
        while self.may_propose(now) {
            let round = self.current_round;
            if self.dag.round_len(round) < self.dag.committee().quorum() {
                break;
            }
            if round.is_multiple_of(2) {
                let leader = self
                    .commit
                    .book()
                    .leader(round)
                    .expect("even round is covered");
                if !self.dag.contains(&VertexId::new(round, leader)) {
                    match self.leader_wait {
                        Some((r, deadline)) if r == round => {
                            if now < deadline {
                                break;
                            }
                            self.record(now, TraceKind::LeaderTimeout { round });
                        }
                        _ => {
                            let deadline = now + self.config.leader_timeout;
                            self.leader_wait = Some((round, deadline));
                            actions.push(Action::SetTimer {
                                at: deadline,
                                id: round,
                            });
                            break;
                        }
                    }
                }
            }
            self.leader_wait = None;
            let v = self.create_vertex(round + 1, now);
            actions.push(Action::Broadcast(v));
        }
        actions
    }

    /// Builds, stores and returns this node's vertex for `round`.
    pub fn create_vertex(&mut self, round: Round, now: Time) -> Vertex {
        let take = self.config.batch_size.min(self.tx_queue.len());
        let txs: Vec<Transaction> = self.tx_queue.drain(..take).collect();
        let edges = if round == 0 {
            Default::default()
        } else {
            self.dag.round(round - 1).map(|p| p.id).collect()
        };
        let v = Vertex {
            id: VertexId::new(round, self.me),
            block: Block {
                txs,
                schedule_epoch: self.commit.active_schedule().epoch,
            },
            edges,
        };
        self.record(
            now,
            TraceKind::VertexCreated {
                id: v.id,
                tx_count: v.block.txs.len() as u64,
                txs: v.block.txs.clone(),
            },
        );
        self.dag
            .insert(v.clone())
            .expect("own vertex extends a held quorum");
        self.current_round = round;
        if round > 0 {
            self.record(now, TraceKind::RoundAdvanced { round });
        }
        self.after_insert(&v.id, now);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> NodeConfig {
        NodeConfig {
            leader_timeout: 20,
            batch_size: 3,
            max_round: None,
            stop_time: None,
        }
    }

    fn node(me: u32) -> Node {
        let c = Committee::equal(4).unwrap();
        Node::new(ValidatorId(me), c, Schedule::round_robin(4), None, config())
    }

    fn genesis(s: u32) -> Vertex {
        Vertex::genesis(ValidatorId(s))
    }

    fn v(round: Round, source: u32, parents: &[u32]) -> Vertex {
        Vertex {
            id: VertexId::new(round, ValidatorId(source)),
            block: Block::default(),
            edges: parents
                .iter()
                .map(|p| VertexId::new(round - 1, ValidatorId(*p)))
                .collect(),
        }
    }

    fn broadcasts(actions: &[Action]) -> Vec<VertexId> {
        actions
            .iter()
            .filter_map(|a| match a {
                Action::Broadcast(v) => Some(v.id),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn quorum_with_leader_advances_immediately() {
        // leader(0) = v0 = this node
        let mut n = node(0);
        n.start(0);
        n.on_deliver(&genesis(1), 1);
        let actions = n.on_deliver(&genesis(2), 2);
        assert_eq!(
            broadcasts(&actions),
            alloc::vec![VertexId::new(1, ValidatorId(0))]
        );
        assert_eq!(n.current_round(), 1);
        assert_eq!(
            n.dag()
                .get(&VertexId::new(1, ValidatorId(0)))
                .unwrap()
                .edges
                .len(),
            3
        );
    }

    #[test]
    fn waits_for_leader_then_times_out() {
        let mut n = node(1);
        n.start(0);
        n.on_deliver(&genesis(2), 1);
        let actions = n.on_deliver(&genesis(3), 2);
        assert_eq!(actions.last(), Some(&Action::SetTimer { at: 22, id: 0 }));
        assert!(broadcasts(&actions).is_empty());
        assert_eq!(n.leader_wait_deadline(), Some(22));
        assert!(n.on_timer(0, 21).is_empty());
        let actions = n.on_timer(0, 22);
        let created = broadcasts(&actions);
        assert_eq!(created, alloc::vec![VertexId::new(1, ValidatorId(1))]);
        let edges = &n.dag().get(&created[0]).unwrap().edges;
        assert!(!edges.contains(&VertexId::new(0, ValidatorId(0))));
        assert!(n
            .trace()
            .iter()
            .any(|r| r.kind == TraceKind::LeaderTimeout { round: 0 }));
    }

    #[test]
    fn leader_arrival_ends_wait() {
        let mut n = node(1);
        n.start(0);
        n.on_deliver(&genesis(2), 1);
        n.on_deliver(&genesis(3), 2);
        let actions = n.on_deliver(&genesis(0), 5);
        assert_eq!(
            broadcasts(&actions),
            alloc::vec![VertexId::new(1, ValidatorId(1))]
        );
        assert_eq!(
            n.dag()
                .get(&VertexId::new(1, ValidatorId(1)))
                .unwrap()
                .edges
                .len(),
            4
        );
        // stale timer is a no-op
        assert!(n.on_timer(0, 22).is_empty());
    }

    #[test]
    fn odd_round_unguarded() {
        let mut n = node(0);
        n.start(0);
        for s in 1..4 {
            n.on_deliver(&genesis(s), 1);
        }
        assert_eq!(n.current_round(), 1);
        n.on_deliver(&v(1, 1, &[0, 1, 2]), 3);
        let actions = n.on_deliver(&v(1, 3, &[0, 1, 2]), 4);
        // v2 is not present at round 1, odd rounds never wait
        assert_eq!(
            broadcasts(&actions),
            alloc::vec![VertexId::new(2, ValidatorId(0))]
        );
    }

    #[test]
    fn buffers_until_parents_arrive() {
        let mut n = node(0);
        n.start(0);
        n.on_deliver(&genesis(1), 1);
        let child = v(1, 1, &[0, 1, 2]);
        n.on_deliver(&child, 2);
        assert_eq!(n.pending_len(), 1);
        assert!(!n.dag().contains(&child.id));
        n.on_deliver(&genesis(2), 3);
        assert_eq!(n.pending_len(), 0);
        assert!(n.dag().contains(&child.id));
    }

    #[test]
    fn duplicates_ignored() {
        let mut n = node(0);
        n.start(0);
        let first = n.on_deliver(&genesis(1), 1);
        assert!(matches!(first[0], Action::Echo(_)));
        let before = n.trace().len();
        assert!(n.on_deliver(&genesis(1), 2).is_empty());
        assert_eq!(n.trace().len(), before);
    }

    #[test]
    fn batching_and_heartbeat() {
        let mut n = node(0);
        for i in 0..5 {
            n.submit(Transaction {
                id: i,
                created_at: 0,
            });
        }
        n.start(0);
        let g = n.dag().get(&VertexId::new(0, ValidatorId(0))).unwrap();
        assert_eq!(g.block.txs.len(), 3);
        assert_eq!(n.tx_queue_len(), 2);
        for s in 1..4 {
            n.on_deliver(&genesis(s), 1);
        }
        let r1 = n.dag().get(&VertexId::new(1, ValidatorId(0))).unwrap();
        assert_eq!(r1.block.txs.len(), 2);
        assert_eq!(r1.edges.len(), 3);
        n.on_deliver(&v(1, 1, &[0, 1, 2]), 2);
        n.on_deliver(&v(1, 2, &[0, 1, 2]), 2);
        // heartbeat with an empty queue
        let r2 = n.dag().get(&VertexId::new(2, ValidatorId(0))).unwrap();
        assert!(r2.block.txs.is_empty());
    }

    #[test]
    fn crash_is_absorbing() {
        let mut n = node(0);
        n.start(0);
        n.crash(1);
        assert!(n.on_deliver(&genesis(1), 2).is_empty());
        assert!(n.start(3).is_empty());
        n.submit(Transaction {
            id: 1,
            created_at: 3,
        });
        assert_eq!(n.tx_queue_len(), 0);
    }
}
