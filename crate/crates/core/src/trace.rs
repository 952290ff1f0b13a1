// Copyright (c) The HammerHead Simulator Authors
// SPDX-License-Identifier: Apache-2.0

//! Per-node audit records consumed by the checkers and metrics.

use alloc::vec::Vec;

use crate::{
    committee::ValidatorId,
    dag::{Transaction, VertexId},
    Round, Time,
};

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceRecord {
    pub node: ValidatorId,
    pub at: Time,
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub kind: TraceKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum TraceKind {
    VertexCreated {
        id: VertexId,
        tx_count: u64,
        txs: Vec<Transaction>,
    },
    VertexDelivered {
        id: VertexId,
    },
    RoundAdvanced {
        round: Round,
    },
    LeaderTimeout {
        round: Round,
    },
    AnchorCommitted {
        round: Round,
        leader: ValidatorId,
        direct: bool,
    },
    VertexOrdered {
        id: VertexId,
        seq: u64,
    },
    ScheduleSwitched {
        epoch: u64,
        initial_round: Round,
        slots: Vec<ValidatorId>,
        scores: Vec<u64>,
    },
    StaleAnchor {
        round: Round,
    },
    Crashed,
}
