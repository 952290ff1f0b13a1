// Copyright (c) The HammerHead Simulator Authors
// SPDX-License-Identifier: Apache-2.0

//! DAG-based Byzantine atomic broadcast with reputation-driven leader
//! schedules, plus a deterministic partial-synchrony simulator to run it in.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, metrics and
//! the command line live in the companion harness crate.

#![no_std]

extern crate alloc;

pub mod commit;
pub mod committee;
pub mod dag;
pub mod node;
pub mod reputation;
pub mod schedule;
pub mod simnet;
pub mod trace;

/// DAG round number.
pub type Round = u64;
/// Simulated time in ticks.
pub type Time = u64;

pub use commit::{CommitEntry, CommitEvent, CommitState};
pub use committee::{Committee, CommitteeError, Stake, ValidatorId};
pub use dag::{Block, DagError, DagState, PathCache, Transaction, Vertex, VertexId};
pub use node::{Action, Node, NodeConfig};
pub use reputation::{ReputationParams, ReputationScores, ScheduleSwap, SwapTable};
pub use schedule::{Schedule, ScheduleBook, ScheduleError};
pub use simnet::{Crash, PreGstPolicy, RunResult, SimError, SimParams, Simulator};
pub use trace::{TraceKind, TraceRecord};
