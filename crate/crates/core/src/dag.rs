// Copyright (c) The HammerHead Simulator Authors
// SPDX-License-Identifier: Apache-2.0

//! Per-validator DAG storage and the structural queries used by the commit
//! rule: causally complete insertion, reachability, and anchor lookup.

use alloc::{
    collections::{BTreeMap, BTreeSet},
    vec::Vec,
};

use thiserror::Error;

use crate::{
    committee::{Committee, ValidatorId},
    schedule::{ScheduleBook, ScheduleError},
    Round, Time,
};

/// Identifies a vertex by its round and author. Reliable broadcast admits at
/// most one vertex per pair, so no content digest is needed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VertexId {
    pub round: Round,
    pub source: ValidatorId,
}

impl VertexId {
    pub const fn new(round: Round, source: ValidatorId) -> Self {
        Self { round, source }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Transaction {
    pub id: u64,
    /// Time the client submitted the transaction.
    pub created_at: Time,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Block {
    pub txs: Vec<Transaction>,
    /// Epoch of the creator's active schedule; informational only.
    pub schedule_epoch: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Vertex {
    pub id: VertexId,
    pub block: Block,
    pub edges: BTreeSet<VertexId>,
}

impl Vertex {
    pub fn genesis(source: ValidatorId) -> Self {
        Self {
            id: VertexId::new(0, source),
            block: Block::default(),
            edges: BTreeSet::new(),
        }
    }

    pub fn round(&self) -> Round {
        self.id.round
    }

    pub fn source(&self) -> ValidatorId {
        self.id.source
    }

    /// Checks edge shape against the committee without looking at any DAG.
    pub fn validate(&self, committee: &Committee) -> Result<(), DagError> {
        if !committee.contains(self.source()) {
            return Err(DagError::MalformedEdges(self.id, "unknown source"));
        }
        if self.round() == 0 {
            if !self.edges.is_empty() {
                return Err(DagError::MalformedEdges(
                    self.id,
                    "genesis vertex has edges",
                ));
            }
            return Ok(());
        }
        if self.edges.iter().any(|e| e.round + 1 != self.round()) {
            return Err(DagError::MalformedEdges(
                self.id,
                "edge does not target the previous round",
            ));
        }
        if self.edges.iter().any(|e| !committee.contains(e.source)) {
            return Err(DagError::MalformedEdges(self.id, "edge to unknown source"));
        }
        if self.edges.len() < committee.quorum() {
            return Err(DagError::MalformedEdges(self.id, "fewer than n - f edges"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DagError {
    #[error("vertex {0:?} is missing parents {1:?}")]
    MissingParents(VertexId, Vec<VertexId>),
    #[error("vertex {0:?} is already present")]
    Duplicate(VertexId),
    #[error("vertex {0:?} is malformed: {1}")]
    MalformedEdges(VertexId, &'static str),
    #[error("vertex {0:?} is not in the dag")]
    UnknownVertex(VertexId),
}

/// One validator's view of the DAG. A vertex is stored only once its whole
/// causal history is stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DagState {
    committee: Committee,
    rounds: Vec<BTreeMap<ValidatorId, Vertex>>,
    len: usize,
}

impl DagState {
    pub fn new(committee: Committee) -> Self {
        Self {
            committee,
            rounds: Vec::new(),
            len: 0,
        }
    }

    pub fn committee(&self) -> &Committee {
        &self.committee
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Highest round holding at least one vertex.
    pub fn highest_round(&self) -> Option<Round> {
        self.rounds.len().checked_sub(1).map(|r| r as Round)
    }

    pub fn contains(&self, id: &VertexId) -> bool {
        self.get(id).is_some()
    }

    pub fn get(&self, id: &VertexId) -> Option<&Vertex> {
        self.rounds.get(id.round as usize)?.get(&id.source)
    }

    /// Vertices of `round` in ascending source order.
    pub fn round(&self, round: Round) -> impl Iterator<Item = &Vertex> + '_ {
        self.rounds
            .get(round as usize)
            .into_iter()
            .flat_map(|m| m.values())
    }

    pub fn round_len(&self, round: Round) -> usize {
        self.rounds.get(round as usize).map_or(0, |m| m.len())
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vertex> + '_ {
        self.rounds.iter().flat_map(|m| m.values())
    }

    /// Parents of `v` that are not stored yet.
    pub fn missing_parents(&self, v: &Vertex) -> Vec<VertexId> {
        v.edges
            .iter()
            .filter(|e| !self.contains(e))
            .copied()
            .collect()
    }

    pub fn insert(&mut self, v: Vertex) -> Result<(), DagError> {
        v.validate(&self.committee)?;
        if self.contains(&v.id) {
            return Err(DagError::Duplicate(v.id));
        }
        let missing = self.missing_parents(&v);
        if !missing.is_empty() {
            return Err(DagError::MissingParents(v.id, missing));
        }
        let r = v.round() as usize;
        if self.rounds.len() <= r {
            self.rounds.resize_with(r + 1, BTreeMap::new);
        }
        self.rounds[r].insert(v.source(), v);
        self.len += 1;
        Ok(())
    }

    /// Whether an edge chain leads from `from` to `to`; every vertex reaches
    /// itself.
    pub fn path(&self, from: &VertexId, to: &VertexId) -> Result<bool, DagError> {
        if !self.contains(from) {
            return Err(DagError::UnknownVertex(*from));
        }
        if to.round > from.round {
            return Ok(false);
        }
        Ok(self.reachable_from(from, to.round).contains(to))
    }

    /// All vertices reachable from `from` (inclusive) at rounds `>= floor`.
    pub fn reachable_from(&self, from: &VertexId, floor: Round) -> Reachability {
        let mut seen = BTreeSet::new();
        if self.contains(from) && from.round >= floor {
            seen.insert(*from);
            let mut frontier: Vec<VertexId> = alloc::vec![*from];
            while let Some(id) = frontier.pop() {
                if id.round == floor {
                    continue;
                }
                for parent in &self.get(&id).expect("causally complete").edges {
                    if seen.insert(*parent) {
                        frontier.push(*parent);
                    }
                }
            }
        }
        Reachability {
            origin: *from,
            floor,
            ids: seen,
        }
    }

    /// Causal history of `from`, skipping everything `stop` reports as already
    /// handled. `stop` must describe a downward-closed set for the result to
    /// be exact.
    pub fn causal_history<F>(&self, from: &VertexId, stop: F) -> BTreeSet<VertexId>
    where
        F: Fn(&VertexId) -> bool,
    {
        let mut out = BTreeSet::new();
        if !self.contains(from) || stop(from) {
            return out;
        }
        out.insert(*from);
        let mut frontier = alloc::vec![*from];
        while let Some(id) = frontier.pop() {
            for parent in &self.get(&id).expect("causally complete").edges {
                if !stop(parent) && out.insert(*parent) {
                    frontier.push(*parent);
                }
            }
        }
        out
    }
}

/// Ancestor set of one vertex down to a floor round, reused across repeated
/// `path` queries from the same origin.
#[derive(Clone, Debug)]
pub struct Reachability {
    origin: VertexId,
    floor: Round,
    ids: BTreeSet<VertexId>,
}

impl Reachability {
    pub fn origin(&self) -> VertexId {
        self.origin
    }

    pub fn contains(&self, id: &VertexId) -> bool {
        debug_assert!(id.round >= self.floor, "query below the floor");
        self.ids.contains(id)
    }
}

/// Memoizes reachability sets per origin for one batch of path queries.
#[derive(Default)]
pub struct PathCache {
    sets: BTreeMap<VertexId, Reachability>,
}

impl PathCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn path(&mut self, dag: &DagState, from: &VertexId, to: &VertexId) -> bool {
        if to.round > from.round || !dag.contains(from) {
            return false;
        }
        if let Some(set) = self.sets.get(from) {
            if set.floor <= to.round {
                return set.contains(to);
            }
        }
        let set = dag.reachable_from(from, to.round);
        let hit = set.contains(to);
        self.sets.insert(*from, set);
        hit
    }
}

/// Leader of anchor round `round` under the book.
pub fn get_leader(book: &ScheduleBook, round: Round) -> Result<ValidatorId, ScheduleError> {
    book.leader(round)
}

/// The leader's vertex at `round`, if this view holds it.
pub fn get_anchor<'a>(
    dag: &'a DagState,
    round: Round,
    book: &ScheduleBook,
) -> Result<Option<&'a Vertex>, ScheduleError> {
    let leader = get_leader(book, round)?;
    Ok(dag.get(&VertexId::new(round, leader)))
}
