// Copyright (c) The HammerHead Simulator Authors
// SPDX-License-Identifier: Apache-2.0

//! Leader schedules and the book of schedules adopted over a run.

use alloc::vec::Vec;

use thiserror::Error;

use crate::{committee::ValidatorId, Round};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleError {
    #[error("round {0} is odd and has no leader")]
    NotAnchorRound(Round),
    #[error("round {0} precedes the first schedule")]
    UncoveredRound(Round),
    #[error("schedule for epoch {got} does not follow epoch {last}")]
    NonConsecutiveEpoch { last: u64, got: u64 },
    #[error("schedule starting at round {got} does not follow round {last}")]
    NonIncreasingRound { last: Round, got: Round },
    #[error("schedule must start at an even round, got {0}")]
    OddInitialRound(Round),
    #[error("schedule has no slots")]
    Empty,
}

/// One epoch's leader rotation. Slot `k` leads anchor round
/// `initial_round + 2k`, cyclically, until the next schedule takes over.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Schedule {
    pub epoch: u64,
    pub initial_round: Round,
    pub slots: Vec<ValidatorId>,
}

impl Schedule {
    pub fn new(
        epoch: u64,
        initial_round: Round,
        slots: Vec<ValidatorId>,
    ) -> Result<Self, ScheduleError> {
        if slots.is_empty() {
            return Err(ScheduleError::Empty);
        }
        if !initial_round.is_multiple_of(2) {
            return Err(ScheduleError::OddInitialRound(initial_round));
        }
        Ok(Self {
            epoch,
            initial_round,
            slots,
        })
    }

    /// Fixed rotation `0, 1, .., n-1` starting at round 0.
    pub fn round_robin(n: usize) -> Self {
        Self {
            epoch: 0,
            initial_round: 0,
            slots: (0..n as u32).map(ValidatorId).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Leader of `round`, ignoring whether a later schedule has replaced this one.
    pub fn leader(&self, round: Round) -> Result<ValidatorId, ScheduleError> {
        if !round.is_multiple_of(2) {
            return Err(ScheduleError::NotAnchorRound(round));
        }
        if round < self.initial_round {
            return Err(ScheduleError::UncoveredRound(round));
        }
        let offset = (round - self.initial_round) / 2;
        Ok(self.slots[(offset % self.slots.len() as u64) as usize])
    }

    /// Number of slots held by `id`.
    pub fn slot_count(&self, id: ValidatorId) -> usize {
        self.slots.iter().filter(|s| **s == id).count()
    }
}

/// Every schedule adopted so far, ordered by epoch. Schedule `k` governs
/// rounds `[S_k.initial_round, S_{k+1}.initial_round)`; the last one is
/// active and open-ended.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScheduleBook {
    schedules: Vec<Schedule>,
}

impl ScheduleBook {
    pub fn new(first: Schedule) -> Self {
        Self {
            schedules: alloc::vec![first],
        }
    }

    pub fn push(&mut self, next: Schedule) -> Result<(), ScheduleError> {
        let last = self.active();
        if next.epoch != last.epoch + 1 {
            return Err(ScheduleError::NonConsecutiveEpoch {
                last: last.epoch,
                got: next.epoch,
            });
        }
        if next.initial_round <= last.initial_round {
            return Err(ScheduleError::NonIncreasingRound {
                last: last.initial_round,
                got: next.initial_round,
            });
        }
        self.schedules.push(next);
        Ok(())
    }

    pub fn active(&self) -> &Schedule {
        self.schedules.last().expect("book is never empty")
    }

    pub fn schedules(&self) -> &[Schedule] {
        &self.schedules
    }

    /// Schedule governing `round`.
    pub fn schedule_for(&self, round: Round) -> Result<&Schedule, ScheduleError> {
        let idx = self.schedules.partition_point(|s| s.initial_round <= round);
        if idx == 0 {
            return Err(ScheduleError::UncoveredRound(round));
        }
        Ok(&self.schedules[idx - 1])
    }

    pub fn leader(&self, round: Round) -> Result<ValidatorId, ScheduleError> {
        if !round.is_multiple_of(2) {
            return Err(ScheduleError::NotAnchorRound(round));
        }
        self.schedule_for(round)?.leader(round)
    }
}
