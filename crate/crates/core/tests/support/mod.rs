// Copyright (c) The HammerHead Simulator Authors
// SPDX-License-Identifier: Apache-2.0

//! Random DAG generation and brute-force oracles shared by the integration
//! tests. The oracles deliberately avoid the library's own traversal and
//! selection helpers.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use hammerhead_core::{
    reputation::{ReputationScores, ScheduleSwap},
    Block, CommitEntry, CommitState, Committee, DagState, ReputationParams, Round, Schedule,
    ScheduleBook, ValidatorId, Vertex, VertexId,
};
use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn vid(round: Round, source: u32) -> VertexId {
    VertexId::new(round, ValidatorId(source))
}

pub fn vertex(round: Round, source: u32, parents: &[u32]) -> Vertex {
    Vertex {
        id: vid(round, source),
        block: Block::default(),
        edges: parents.iter().map(|p| vid(round - 1, *p)).collect(),
    }
}

/// A causally complete DAG: genesis plus `rounds` rounds in which at least a
/// quorum of validators propose, each pointing at a random quorum-or-more of
/// the previous round.
pub fn random_dag(seed: u64, n: usize, rounds: Round) -> Vec<Vertex> {
    let committee = Committee::equal(n).unwrap();
    let quorum = committee.quorum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Vertex> = (0..n as u32)
        .map(|s| Vertex::genesis(ValidatorId(s)))
        .collect();
    let mut prev: Vec<u32> = (0..n as u32).collect();
    for round in 1..=rounds {
        let mut sources: Vec<u32> = (0..n as u32).collect();
        sources.shuffle(&mut rng);
        sources.truncate(rng.gen_range(quorum..=n));
        sources.sort_unstable();
        for &s in &sources {
            let mut parents = prev.clone();
            parents.shuffle(&mut rng);
            parents.truncate(rng.gen_range(quorum..=prev.len()));
            out.push(vertex(round, s, &parents));
        }
        prev = sources;
    }
    out
}

pub fn build_dag(n: usize, vertices: &[Vertex]) -> DagState {
    let mut dag = DagState::new(Committee::equal(n).unwrap());
    for v in vertices {
        dag.insert(v.clone()).unwrap();
    }
    dag
}

/// Random delivery order that respects causality.
pub fn shuffled_delivery(vertices: &[Vertex], seed: u64) -> Vec<Vertex> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool = vertices.to_vec();
    pool.shuffle(&mut rng);
    let mut have = BTreeSet::new();
    let mut out = Vec::with_capacity(pool.len());
    while !pool.is_empty() {
        let i = pool
            .iter()
            .position(|v| v.edges.iter().all(|e| have.contains(e)))
            .expect("causally complete input");
        let v = pool.remove(i);
        have.insert(v.id);
        out.push(v);
    }
    out
}

/// Plain recursive search, no memoization.
pub fn naive_path(edges: &BTreeMap<VertexId, Vec<VertexId>>, from: VertexId, to: VertexId) -> bool {
    if from == to {
        return true;
    }
    if from.round <= to.round {
        return false;
    }
    edges[&from].iter().any(|p| naive_path(edges, *p, to))
}

pub fn edge_map(vertices: &[Vertex]) -> BTreeMap<VertexId, Vec<VertexId>> {
    vertices
        .iter()
        .map(|v| (v.id, v.edges.iter().copied().collect()))
        .collect()
}

/// Scores by enumerating every edge: an edge from a round `e + 1` vertex to
/// the leader vertex of even round `e` in `[from, to)` earns its source a
/// point when the trigger reaches that vertex.
pub fn oracle_scores(
    vertices: &[Vertex],
    book: &ScheduleBook,
    n: usize,
    from: Round,
    to: Round,
    trigger: VertexId,
) -> Vec<u64> {
    let edges = edge_map(vertices);
    let mut points = vec![0; n];
    for v in vertices {
        for p in &v.edges {
            let leader_vertex = p.round % 2 == 0
                && p.round >= from
                && p.round < to
                && book.leader(p.round) == Ok(p.source);
            if leader_vertex && naive_path(&edges, trigger, v.id) {
                points[v.id.source.index()] += 1;
            }
        }
    }
    points
}

/// Bad set: the longest prefix of the (score asc, id desc) ranking whose
/// stake fits the bound. Good set: the best `|B|` others by (score desc,
/// id asc). Each bad slot goes to the good validator whose turn it is.
pub fn oracle_swap(
    prev: &Schedule,
    points: &[u64],
    stakes: &[u64],
    fraction: f64,
) -> (Vec<ValidatorId>, Vec<ValidatorId>, Vec<ValidatorId>) {
    let n = stakes.len();
    let total: u64 = stakes.iter().sum();
    let bound = ((total - 1) / 3).min((fraction * total as f64) as u64);

    // rank by counting how many validators precede each one
    let worse = |a: usize, b: usize| points[a] < points[b] || (points[a] == points[b] && a > b);
    let mut ranked = vec![0; n];
    for i in 0..n {
        let rank = (0..n).filter(|&j| j != i && worse(j, i)).count();
        ranked[rank] = i;
    }
    let mut k = 0;
    for len in 0..=n {
        let stake: u64 = ranked[..len].iter().map(|&i| stakes[i]).sum();
        if stake <= bound {
            k = len;
        } else {
            break;
        }
    }
    let mut bad: Vec<usize> = ranked[..k].to_vec();

    let better = |a: usize, b: usize| points[a] > points[b] || (points[a] == points[b] && a < b);
    let others: Vec<usize> = (0..n).filter(|i| !bad.contains(i)).collect();
    let mut good: Vec<usize> = others
        .iter()
        .copied()
        .filter(|&i| others.iter().filter(|&&j| j != i && better(j, i)).count() < bad.len())
        .collect();
    good.sort_by_key(|&i| others.iter().filter(|&&j| j != i && better(j, i)).count());
    bad.truncate(good.len());

    let mut slots = prev.slots.clone();
    let mut turn = 0;
    for slot in slots.iter_mut() {
        if bad.contains(&slot.index()) {
            *slot = ValidatorId(good[turn % good.len()] as u32);
            turn += 1;
        }
    }
    let ids = |v: Vec<usize>| v.into_iter().map(|i| ValidatorId(i as u32)).collect();
    (ids(bad), ids(good), slots)
}

pub fn swap_matches_oracle(
    swap: &ScheduleSwap,
    prev: &Schedule,
    scores: &ReputationScores,
    stakes: &[u64],
    fraction: f64,
) -> bool {
    let (bad, good, slots) = oracle_swap(prev, &scores.points, stakes, fraction);
    swap.bad == bad && swap.good == good && swap.schedule.slots == slots
}

/// Feeds `order` into a fresh engine, processing each vertex on insertion.
pub fn commit_log(
    n: usize,
    order: &[Vertex],
    schedule: Schedule,
    params: Option<ReputationParams>,
) -> (Vec<CommitEntry>, Vec<Schedule>) {
    let mut dag = DagState::new(Committee::equal(n).unwrap());
    let mut state = CommitState::new(schedule, params);
    for v in order {
        dag.insert(v.clone()).unwrap();
        state.process(&dag, v);
    }
    (state.log().to_vec(), state.book().schedules().to_vec())
}
