// Copyright (c) The HammerHead Simulator Authors
// SPDX-License-Identifier: Apache-2.0

//! Metrics derived from traces alone.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use hammerhead_core::{Round, Time, TraceKind, TraceRecord, ValidatorId, VertexId};
use serde::{Deserialize, Serialize};

use crate::trace_io::RunTraces;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Mean ticks from client submission to ordering at the receiving node.
    pub latency_avg: f64,
    pub latency_p50: Time,
    pub latency_p95: Time,
    /// Distinct transactions ordered by some honest node.
    pub ordered_txs: u64,
    /// Distinct ordered transactions per tick over the run horizon.
    pub throughput: f64,
    pub horizon: Time,
    pub committed_anchor_rounds: u64,
    pub skipped_anchor_rounds: u64,
    pub skipped_after_gst: u64,
    pub leader_timeouts: u64,
    /// Lowest final epoch among honest nodes.
    pub min_epoch: u64,
    /// Largest spread of switch times for one epoch across honest nodes,
    /// over epochs first entered after GST and reached by all of them.
    pub epoch_switch_lag_max: Option<Time>,
}

/// Nodes that never crashed during the run.
pub fn honest_nodes(traces: &RunTraces) -> Vec<ValidatorId> {
    traces
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, records)| !records.iter().any(|r| r.kind == TraceKind::Crashed))
        .map(|(i, _)| ValidatorId(i as u32))
        .collect()
}

pub fn crashed_count(traces: &RunTraces) -> usize {
    traces.nodes.len() - honest_nodes(traces).len()
}

/// First round whose vertices were all created after GST.
pub fn first_post_gst_round(traces: &RunTraces) -> Round {
    let gst = traces.config.gst;
    traces
        .nodes
        .iter()
        .flatten()
        .filter_map(|r| match r.kind {
            TraceKind::VertexCreated { id, .. } if r.at < gst => Some(id.round + 1),
            _ => None,
        })
        .max()
        .unwrap_or(0)
}

/// Anchor rounds committed by at least one honest node.
pub fn committed_anchor_rounds(traces: &RunTraces) -> BTreeSet<Round> {
    honest_nodes(traces)
        .into_iter()
        .flat_map(|id| traces.nodes[id.index()].iter())
        .filter_map(|r| match r.kind {
            TraceKind::AnchorCommitted { round, .. } => Some(round),
            _ => None,
        })
        .collect()
}

/// Even rounds up to the last committed anchor that no honest node committed,
/// restricted to rounds `>= from`.
pub fn skipped_anchor_rounds(traces: &RunTraces, from: Round) -> Vec<Round> {
    let committed = committed_anchor_rounds(traces);
    let Some(last) = committed.last().copied() else {
        return Vec::new();
    };
    let start = from + from % 2;
    (start..=last)
        .step_by(2)
        .filter(|r| !committed.contains(r))
        .collect()
}

/// Switch time of each epoch per node.
pub fn epoch_switch_times(records: &[TraceRecord]) -> BTreeMap<u64, Time> {
    records
        .iter()
        .filter_map(|r| match r.kind {
            TraceKind::ScheduleSwitched { epoch, .. } => Some((epoch, r.at)),
            _ => None,
        })
        .collect()
}

pub fn epoch_switch_lag_max(traces: &RunTraces) -> Option<Time> {
    let honest = honest_nodes(traces);
    let per_node: Vec<BTreeMap<u64, Time>> = honest
        .iter()
        .map(|id| epoch_switch_times(&traces.nodes[id.index()]))
        .collect();
    let first = per_node.first()?;
    let mut worst = None;
    for epoch in first.keys() {
        let times: Option<Vec<Time>> = per_node.iter().map(|m| m.get(epoch).copied()).collect();
        let Some(times) = times else { continue };
        let lo = *times.iter().min().expect("non-empty");
        let hi = *times.iter().max().expect("non-empty");
        if lo >= traces.config.gst {
            worst = Some(worst.map_or(hi - lo, |w: Time| w.max(hi - lo)));
        }
    }
    worst
}

fn percentile(sorted: &[Time], pct: usize) -> Time {
    if sorted.is_empty() {
        return 0;
    }
    // nearest rank
    let rank = (pct * sorted.len()).div_ceil(100).max(1);
    sorted[rank - 1]
}

pub fn compute(traces: &RunTraces) -> Metrics {
    let honest = honest_nodes(traces);

    let mut block_txs: HashMap<VertexId, Vec<(u64, Time)>> = HashMap::new();
    for records in &traces.nodes {
        for r in records {
            if let TraceKind::VertexCreated { id, txs, .. } = &r.kind {
                block_txs.insert(*id, txs.iter().map(|t| (t.id, t.created_at)).collect());
            }
        }
    }

    let mut ordered_txs = BTreeSet::new();
    let mut latencies = Vec::new();
    let mut leader_timeouts = 0;
    for id in &honest {
        for r in &traces.nodes[id.index()] {
            match &r.kind {
                TraceKind::VertexOrdered { id: vid, .. } => {
                    let Some(txs) = block_txs.get(vid) else {
                        continue;
                    };
                    for (tx, created) in txs {
                        ordered_txs.insert(*tx);
                        if vid.source == *id {
                            latencies.push(r.at - created);
                        }
                    }
                }
                TraceKind::LeaderTimeout { .. } => leader_timeouts += 1,
                _ => {}
            }
        }
    }
    latencies.sort_unstable();
    let latency_avg = if latencies.is_empty() {
        0.0
    } else {
        latencies.iter().sum::<Time>() as f64 / latencies.len() as f64
    };

    let horizon = traces.end_time.max(1);
    let min_epoch = honest
        .iter()
        .map(|id| {
            epoch_switch_times(&traces.nodes[id.index()])
                .keys()
                .max()
                .copied()
                .unwrap_or(0)
        })
        .min()
        .unwrap_or(0);

    Metrics {
        latency_avg,
        latency_p50: percentile(&latencies, 50),
        latency_p95: percentile(&latencies, 95),
        ordered_txs: ordered_txs.len() as u64,
        throughput: ordered_txs.len() as f64 / horizon as f64,
        horizon,
        committed_anchor_rounds: committed_anchor_rounds(traces).len() as u64,
        skipped_anchor_rounds: skipped_anchor_rounds(traces, 0).len() as u64,
        skipped_after_gst: skipped_anchor_rounds(traces, first_post_gst_round(traces)).len() as u64,
        leader_timeouts,
        min_epoch,
        epoch_switch_lag_max: epoch_switch_lag_max(traces),
    }
}
