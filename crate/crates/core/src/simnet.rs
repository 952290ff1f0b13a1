// Copyright (c) The HammerHead Simulator Authors
// SPDX-License-Identifier: Apache-2.0

//! Deterministic discrete-event network under partial synchrony.
//!
//! Time is an integer tick count. A message sent at `t` arrives no later
//! than `delta + max(gst, t)`. Per-message delays are drawn from a ChaCha
//! stream keyed by (seed, vertex, sender, receiver), so a given message gets
//! the same delay in every run that sends it. Events at equal times execute
//! in enqueue order.

use alloc::{collections::BinaryHeap, rc::Rc, vec::Vec};
use core::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::{
    committee::{Committee, ValidatorId},
    dag::{Transaction, Vertex, VertexId},
    node::{Action, Node, NodeConfig},
    reputation::ReputationParams,
    schedule::Schedule,
    trace::TraceRecord,
    Round, Time,
};

/// How the adversary delays messages sent before GST.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(tag = "policy", rename_all = "kebab-case", deny_unknown_fields)
)]
pub enum PreGstPolicy {
    /// Everything sent before GST arrives in `(gst, gst + delta]`.
    HoldUntilGst,
    /// Seeded delay in `[1, max]`, capped by the GST bound.
    RandomDelay { max: Time },
}

/// One validator crash.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct Crash {
    pub node: ValidatorId,
    pub at: Time,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimParams {
    pub committee: Committee,
    pub schedule: Schedule,
    /// `None` keeps the initial schedule for the whole run.
    pub reputation: Option<ReputationParams>,
    pub gst: Time,
    pub delta: Time,
    pub leader_timeout: Time,
    pub pre_gst: PreGstPolicy,
    pub seed: u64,
    pub crashes: Vec<Crash>,
    pub max_round: Option<Round>,
    pub max_time: Option<Time>,
    /// Client transactions per tick per validator; the total load is spread
    /// over validators alive at submission time.
    pub tx_rate_per_node: f64,
    pub batch_size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("delta must be at least one tick")]
    ZeroDelta,
    #[error("a run needs max_round or max_time")]
    Unbounded,
    #[error("crash targets unknown validator {0}")]
    UnknownValidator(ValidatorId),
    #[error("validator {0} crashes more than once")]
    DuplicateCrash(ValidatorId),
    #[error("schedule names validator {0} outside the committee")]
    ScheduleOutsideCommittee(ValidatorId),
    #[error("transaction rate must be finite and non-negative")]
    BadRate,
}

impl SimParams {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.delta == 0 {
            return Err(SimError::ZeroDelta);
        }
        if self.max_round.is_none() && self.max_time.is_none() {
            return Err(SimError::Unbounded);
        }
        if let Some(bad) = self
            .schedule
            .slots
            .iter()
            .find(|s| !self.committee.contains(**s))
        {
            return Err(SimError::ScheduleOutsideCommittee(*bad));
        }
        for (i, c) in self.crashes.iter().enumerate() {
            if !self.committee.contains(c.node) {
                return Err(SimError::UnknownValidator(c.node));
            }
            if self.crashes[..i].iter().any(|o| o.node == c.node) {
                return Err(SimError::DuplicateCrash(c.node));
            }
        }
        if !self.tx_rate_per_node.is_finite() || self.tx_rate_per_node < 0.0 {
            return Err(SimError::BadRate);
        }
        Ok(())
    }

    fn node_config(&self) -> NodeConfig {
        NodeConfig {
            leader_timeout: self.leader_timeout,
            batch_size: self.batch_size,
            max_round: self.max_round,
            stop_time: self.max_time,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EventKind {
    Deliver {
        vertex: Rc<Vertex>,
        from: ValidatorId,
        to: ValidatorId,
        sent_at: Time,
    },
    Timer {
        node: ValidatorId,
        id: u64,
    },
    Crash {
        node: ValidatorId,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimEvent {
    pub at: Time,
    pub seq: u64,
    pub kind: EventKind,
}

impl Ord for SimEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (at, seq)
        (other.at, other.seq).cmp(&(self.at, self.seq))
    }
}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub struct RunResult {
    pub traces: Vec<Vec<TraceRecord>>,
    pub nodes: Vec<Node>,
    pub end_time: Time,
    pub events: u64,
    /// Deliveries later than `delta + max(gst, sent_at)`; always zero.
    pub late_deliveries: u64,
}

pub struct Simulator {
    params: SimParams,
    nodes: Vec<Node>,
    queue: BinaryHeap<SimEvent>,
    now: Time,
    seq: u64,
    next_tx: u64,
    executed: u64,
    late_deliveries: u64,
}

impl Simulator {
    pub fn new(params: SimParams) -> Result<Self, SimError> {
        params.validate()?;
        let nodes = params
            .committee
            .members()
            .map(|id| {
                Node::new(
                    id,
                    params.committee.clone(),
                    params.schedule.clone(),
                    params.reputation,
                    params.node_config(),
                )
            })
            .collect();
        let mut sim = Self {
            params,
            nodes,
            queue: BinaryHeap::new(),
            now: 0,
            seq: 0,
            next_tx: 0,
            executed: 0,
            late_deliveries: 0,
        };
        let crashes = sim.params.crashes.clone();
        for c in &crashes {
            if c.at == 0 {
                sim.nodes[c.node.index()].crash(0);
            } else {
                sim.push(c.at, EventKind::Crash { node: c.node });
            }
        }
        for i in 0..sim.nodes.len() {
            let actions = sim.nodes[i].start(0);
            sim.apply(ValidatorId(i as u32), actions);
        }
        Ok(sim)
    }

    pub fn now(&self) -> Time {
        self.now
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn pending_events(&self) -> usize {
        self.queue.len()
    }

    fn push(&mut self, at: Time, kind: EventKind) {
        let seq = self.seq;
        self.seq += 1;
        self.queue.push(SimEvent { at, seq, kind });
    }

    fn draw(&self, id: VertexId, from: ValidatorId, to: ValidatorId, tag: u32, max: Time) -> Time {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.params.seed.to_le_bytes());
        key[8..16].copy_from_slice(&id.round.to_le_bytes());
        key[16..20].copy_from_slice(&id.source.0.to_le_bytes());
        key[20..24].copy_from_slice(&from.0.to_le_bytes());
        key[24..28].copy_from_slice(&to.0.to_le_bytes());
        key[28..32].copy_from_slice(&tag.to_le_bytes());
        ChaCha8Rng::from_seed(key).gen_range(1..=max.max(1))
    }

    /// Delivery time of `id` from `from` to `to` when sent at `now`.
    pub fn delivery_time(
        &self,
        id: VertexId,
        from: ValidatorId,
        to: ValidatorId,
        now: Time,
    ) -> Time {
        let p = &self.params;
        let network = self.draw(id, from, to, 0, p.delta);
        if now >= p.gst {
            return now + network;
        }
        match p.pre_gst {
            PreGstPolicy::HoldUntilGst => p.gst + network,
            PreGstPolicy::RandomDelay { max } => {
                let adversarial = now + self.draw(id, from, to, 1, max);
                adversarial.min(p.gst + network)
            }
        }
    }

    /// Sends `v` from `from` to every other validator.
    pub fn broadcast(&mut self, from: ValidatorId, v: Rc<Vertex>, now: Time) {
        for to in (0..self.nodes.len() as u32).map(ValidatorId) {
            if to == from {
                continue;
            }
            let at = self.delivery_time(v.id, from, to, now);
            self.push(
                at,
                EventKind::Deliver {
                    vertex: v.clone(),
                    from,
                    to,
                    sent_at: now,
                },
            );
        }
    }

    fn apply(&mut self, node: ValidatorId, actions: Vec<Action>) {
        for action in actions {
            match action {
                Action::Broadcast(v) | Action::Echo(v) => {
                    self.broadcast(node, Rc::new(v), self.now)
                }
                Action::SetTimer { at, id } => self.push(at, EventKind::Timer { node, id }),
            }
        }
    }

    fn submit_arrivals(&mut self, until: Time) {
        let total_rate = self.params.tx_rate_per_node * self.nodes.len() as f64;
        if total_rate <= 0.0 {
            return;
        }
        let n = self.nodes.len();
        loop {
            let arrival = (self.next_tx as f64 / total_rate) as Time;
            if arrival > until || self.params.max_time.is_some_and(|stop| arrival >= stop) {
                break;
            }
            let first = (self.next_tx % n as u64) as usize;
            let target = if self.nodes[first].is_crashed() {
                // clients of a crashed validator fail over evenly
                let alive: Vec<usize> = (0..n).filter(|i| !self.nodes[*i].is_crashed()).collect();
                (!alive.is_empty()).then(|| alive[(self.next_tx / n as u64) as usize % alive.len()])
            } else {
                Some(first)
            };
            if let Some(target) = target {
                self.nodes[target].submit(Transaction {
                    id: self.next_tx,
                    created_at: arrival,
                });
            }
            self.next_tx += 1;
        }
    }

    /// Executes the earliest pending event.
    pub fn step(&mut self) -> Option<SimEvent> {
        let event = self.queue.pop()?;
        debug_assert!(event.at >= self.now);
        self.now = event.at;
        self.executed += 1;
        self.submit_arrivals(self.now);
        match &event.kind {
            EventKind::Deliver {
                vertex,
                to,
                sent_at,
                ..
            } => {
                if self.now > self.params.delta + self.params.gst.max(*sent_at) {
                    self.late_deliveries += 1;
                }
                let actions = self.nodes[to.index()].on_deliver(vertex, self.now);
                self.apply(*to, actions);
            }
            EventKind::Timer { node, id } => {
                let actions = self.nodes[node.index()].on_timer(*id, self.now);
                self.apply(*node, actions);
            }
            EventKind::Crash { node } => self.nodes[node.index()].crash(self.now),
        }
        Some(event)
    }

    pub fn run_to_end(mut self) -> RunResult {
        while self.step().is_some() {}
        let end_time = self.params.max_time.unwrap_or(self.now);
        let traces = self.nodes.iter().map(|n| n.trace().to_vec()).collect();
        RunResult {
            traces,
            nodes: self.nodes,
            end_time,
            events: self.executed,
            late_deliveries: self.late_deliveries,
        }
    }
}

/// Runs a simulation until every node has stopped proposing and all
/// messages are delivered.
pub fn run(params: SimParams) -> Result<RunResult, SimError> {
    Ok(Simulator::new(params)?.run_to_end())
}
