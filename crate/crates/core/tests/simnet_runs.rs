// Copyright (c) The HammerHead Simulator Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use hammerhead_core::{
    simnet::run, Committee, Crash, PreGstPolicy, ReputationParams, Round, Schedule, SimParams,
    TraceKind, TraceRecord, ValidatorId, VertexId,
};

fn params(n: usize, max_round: Round) -> SimParams {
    SimParams {
        committee: Committee::equal(n).unwrap(),
        schedule: Schedule::round_robin(n),
        reputation: None,
        gst: 0,
        delta: 10,
        leader_timeout: 20,
        pre_gst: PreGstPolicy::HoldUntilGst,
        seed: 42,
        crashes: Vec::new(),
        max_round: Some(max_round),
        max_time: None,
        tx_rate_per_node: 0.5,
        batch_size: 10,
    }
}

fn committed(records: &[TraceRecord]) -> Vec<Round> {
    records
        .iter()
        .filter_map(|r| match r.kind {
            TraceKind::AnchorCommitted { round, .. } => Some(round),
            _ => None,
        })
        .collect()
}

fn ordered(records: &[TraceRecord]) -> Vec<VertexId> {
    records
        .iter()
        .filter_map(|r| match r.kind {
            TraceKind::VertexOrdered { id, .. } => Some(id),
            _ => None,
        })
        .collect()
}

#[test]
fn same_seed_same_traces() {
    let mut p = params(7, 30);
    p.reputation = Some(ReputationParams::default());
    p.crashes = vec![Crash {
        node: ValidatorId(6),
        at: 55,
    }];
    let a = run(p.clone()).unwrap();
    let b = run(p.clone()).unwrap();
    assert_eq!(a.traces, b.traces);
    assert_eq!(a.end_time, b.end_time);
    p.seed = 43;
    assert_ne!(run(p).unwrap().traces, a.traces);
}

#[test]
fn faultless_run_commits_steadily() {
    let result = run(params(4, 20)).unwrap();
    assert_eq!(result.late_deliveries, 0);
    for records in &result.traces {
        assert!(committed(records).len() >= 8, "{:?}", committed(records));
    }
}

#[test]
fn round_robin_skips_every_crashed_slot() {
    let mut p = params(4, 40);
    p.crashes = vec![Crash {
        node: ValidatorId(3),
        at: 0,
    }];
    let result = run(p).unwrap();
    for records in &result.traces[..3] {
        let rounds: BTreeSet<Round> = committed(records).into_iter().collect();
        let last = *rounds.last().unwrap();
        assert!(last >= 30);
        for r in (0..=last).step_by(2) {
            // round r is led by validator (r / 2) mod 4
            assert_eq!(rounds.contains(&r), (r / 2) % 4 != 3, "round {r}");
        }
    }
    assert_eq!(
        result.traces[3],
        vec![TraceRecord {
            node: ValidatorId(3),
            at: 0,
            kind: TraceKind::Crashed
        }]
    );
}

#[test]
fn hammerhead_stops_skipping_crashed_leader() {
    let mut p = params(4, 80);
    p.reputation = Some(ReputationParams {
        switch_interval: 10,
        exclusion_fraction: 0.33,
    });
    p.crashes = vec![Crash {
        node: ValidatorId(3),
        at: 0,
    }];
    let result = run(p).unwrap();
    let rounds: BTreeSet<Round> = committed(&result.traces[0]).into_iter().collect();
    let last = *rounds.last().unwrap();
    let skipped: Vec<Round> = (0..=last)
        .step_by(2)
        .filter(|r| !rounds.contains(r))
        .collect();
    assert!(skipped.iter().all(|r| *r < 20), "{skipped:?}");
}

#[test]
fn honest_logs_are_prefix_consistent() {
    for seed in 0..10 {
        let mut p = params(7, 40);
        p.seed = seed;
        p.gst = 60;
        p.pre_gst = PreGstPolicy::RandomDelay { max: 40 };
        p.reputation = Some(ReputationParams {
            switch_interval: 4,
            exclusion_fraction: 0.33,
        });
        p.crashes = vec![
            Crash {
                node: ValidatorId(1),
                at: 30,
            },
            Crash {
                node: ValidatorId(5),
                at: 90,
            },
        ];
        let result = run(p).unwrap();
        assert_eq!(result.late_deliveries, 0);
        let logs: Vec<Vec<VertexId>> = result.traces.iter().map(|t| ordered(t)).collect();
        for a in &logs {
            for b in &logs {
                let k = a.len().min(b.len());
                assert_eq!(a[..k], b[..k], "seed {seed}");
            }
        }
    }
}

#[test]
fn echo_completes_broadcast_of_crashed_sender() {
    // validator 0 crashes right after proposing; peers still converge
    for at in 1..40 {
        let mut p = params(4, 12);
        p.crashes = vec![Crash {
            node: ValidatorId(0),
            at,
        }];
        let result = run(p).unwrap();
        let held: Vec<BTreeSet<VertexId>> = result.traces[1..]
            .iter()
            .map(|records| {
                records
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
        assert!(held.windows(2).all(|w| w[0] == w[1]), "crash at {at}");
    }
}
