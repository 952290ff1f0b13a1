// Copyright (c) The HammerHead Simulator Authors
// SPDX-License-Identifier: Apache-2.0

//! Property checkers over completed traces. Violations are results, not
//! errors.

use std::collections::{BTreeMap, BTreeSet};

use hammerhead_core::{Round, Time, TraceKind, ValidatorId, VertexId};
use serde::Serialize;

use crate::{
    metrics::{epoch_switch_lag_max, first_post_gst_round, honest_nodes, skipped_anchor_rounds},
    trace_io::RunTraces,
};

/// Anchor rounds tolerated on top of `(T + 1)` per crashed validator: the
/// epoch that is active when the crashes happen may still hand slots to the
/// crashed validators before its first post-crash switch.
pub const UTILIZATION_WARMUP: u64 = 4;

/// Message delays allowed between two honest nodes' switches to the same
/// epoch, on top of one delay and one leader timeout: the trigger anchor,
/// its votes and the vertex that commits it.
pub const VIEW_DISTANCE_PIPELINE_DEPTH: u64 = 3;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    Ok,
    Violation { detail: String },
    Inconclusive { detail: String },
}

impl Verdict {
    pub fn is_violation(&self) -> bool {
        matches!(self, Verdict::Violation { .. })
    }

    pub fn is_ok(&self) -> bool {
        matches!(self, Verdict::Ok)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TotalOrderViolation {
    pub node_a: ValidatorId,
    pub node_b: ValidatorId,
    pub index: usize,
}

fn ordered_sequence(records: &[hammerhead_core::TraceRecord]) -> Result<Vec<VertexId>, usize> {
    let mut out = Vec::new();
    for r in records {
        if let TraceKind::VertexOrdered { id, seq } = r.kind {
            if seq != out.len() as u64 {
                return Err(out.len());
            }
            out.push(id);
        }
    }
    Ok(out)
}

/// Every pair of nodes' ordered sequences must be prefix-consistent, and
/// sequence numbers must be gapless. Crashed nodes are included: they
/// behaved correctly until they stopped.
pub fn check_total_order(traces: &RunTraces) -> Result<(), TotalOrderViolation> {
    let mut sequences = Vec::new();
    for (i, records) in traces.nodes.iter().enumerate() {
        let node = ValidatorId(i as u32);
        match ordered_sequence(records) {
            Ok(seq) => {
                let mut seen = BTreeSet::new();
                if let Some(index) = seq.iter().position(|id| !seen.insert(*id)) {
                    return Err(TotalOrderViolation {
                        node_a: node,
                        node_b: node,
                        index,
                    });
                }
                sequences.push((node, seq));
            }
            Err(index) => {
                return Err(TotalOrderViolation {
                    node_a: node,
                    node_b: node,
                    index,
                })
            }
        }
    }
    for (i, (a, sa)) in sequences.iter().enumerate() {
        for (b, sb) in &sequences[i + 1..] {
            if let Some(index) = sa.iter().zip(sb).position(|(x, y)| x != y) {
                return Err(TotalOrderViolation {
                    node_a: *a,
                    node_b: *b,
                    index,
                });
            }
        }
    }
    Ok(())
}

pub fn total_order_verdict(traces: &RunTraces) -> Verdict {
    match check_total_order(traces) {
        Ok(()) => Verdict::Ok,
        Err(v) => Verdict::Violation {
            detail: format!("{} and {} diverge at index {}", v.node_a, v.node_b, v.index),
        },
    }
}

/// Same epoch implies the same schedule everywhere; every epoch reached by
/// one honest node must be reached by all of them before the horizon.
pub fn check_schedule_agreement(traces: &RunTraces) -> Verdict {
    let mut by_epoch: BTreeMap<u64, (ValidatorId, Round, Vec<ValidatorId>)> = BTreeMap::new();
    for (i, records) in traces.nodes.iter().enumerate() {
        let node = ValidatorId(i as u32);
        let mut expected_epoch = 1;
        for r in records {
            let TraceKind::ScheduleSwitched {
                epoch,
                initial_round,
                slots,
                ..
            } = &r.kind
            else {
                continue;
            };
            if *epoch != expected_epoch {
                return Verdict::Violation {
                    detail: format!("{node} switched to epoch {epoch}, expected {expected_epoch}"),
                };
            }
            expected_epoch += 1;
            match by_epoch.get(epoch) {
                Some((first, round, s)) if *round != *initial_round || s != slots => {
                    return Verdict::Violation {
                        detail: format!("epoch {epoch} differs between {first} and {node}"),
                    };
                }
                Some(_) => {}
                None => {
                    by_epoch.insert(*epoch, (node, *initial_round, slots.clone()));
                }
            }
        }
    }
    let honest = honest_nodes(traces);
    let reached: Vec<u64> = honest
        .iter()
        .map(|id| {
            traces.nodes[id.index()]
                .iter()
                .filter(|r| matches!(r.kind, TraceKind::ScheduleSwitched { .. }))
                .count() as u64
        })
        .collect();
    let (Some(lo), Some(hi)) = (reached.iter().min(), reached.iter().max()) else {
        return Verdict::Ok;
    };
    if lo < hi {
        return Verdict::Inconclusive {
            detail: format!("epoch {} not yet reached by every honest node", lo + 1),
        };
    }
    Verdict::Ok
}

/// Reliable-broadcast agreement and validity: every vertex any honest node
/// received (or created) is held by every honest node, which covers every
/// vertex a never-crashed node created.
pub fn check_reliable_broadcast(traces: &RunTraces) -> Verdict {
    let honest = honest_nodes(traces);
    let held: Vec<BTreeSet<VertexId>> = honest
        .iter()
        .map(|id| {
            traces.nodes[id.index()]
                .iter()
                .filter_map(|r| match r.kind {
                    TraceKind::VertexCreated { id, .. } | TraceKind::VertexDelivered { id } => {
                        Some(id)
                    }
                    _ => None,
                })
                .collect()
        })
        .collect();
    let union: BTreeSet<VertexId> = held.iter().flatten().copied().collect();
    for (id, set) in honest.iter().zip(&held) {
        if let Some(missing) = union.difference(set).next() {
            return Verdict::Violation {
                detail: format!("{id} never received {missing:?}"),
            };
        }
    }
    Verdict::Ok
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UtilizationReport {
    pub skipped: u64,
    pub bound: u64,
    pub crashed: u64,
    pub skipped_rounds: Vec<Round>,
    pub ok: bool,
}

/// Anchor rounds after GST that no honest node committed, against
/// `(T + 1) * crashed + UTILIZATION_WARMUP`.
pub fn check_leader_utilization(traces: &RunTraces) -> UtilizationReport {
    let from = first_post_gst_round(traces);
    let skipped_rounds = skipped_anchor_rounds(traces, from);
    let crashed = (traces.nodes.len() - honest_nodes(traces).len()) as u64;
    let bound = (traces.config.t + 1) * crashed + UTILIZATION_WARMUP;
    let skipped = skipped_rounds.len() as u64;
    UtilizationReport {
        skipped,
        bound,
        crashed,
        skipped_rounds,
        ok: skipped <= bound,
    }
}

/// Allowed spread between honest nodes' switches to one epoch.
pub fn view_distance_bound(traces: &RunTraces) -> Time {
    let c = &traces.config;
    c.delta + c.leader_timeout() + VIEW_DISTANCE_PIPELINE_DEPTH * c.delta
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ViewDistanceReport {
    pub observed: Option<Time>,
    pub bound: Time,
    pub ok: bool,
}

pub fn check_view_distance(traces: &RunTraces) -> ViewDistanceReport {
    let observed = epoch_switch_lag_max(traces);
    let bound = view_distance_bound(traces);
    ViewDistanceReport {
        observed,
        bound,
        ok: observed.is_none_or(|o| o <= bound),
    }
}
