// Copyright (c) The HammerHead Simulator Authors
// SPDX-License-Identifier: Apache-2.0

//! Static committee: validator identities, stakes and quorum thresholds.

use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

/// Stake units held by one validator.
pub type Stake = u64;

/// Position of a validator in the committee. The natural order of ids is the
/// tie-break order used by every deterministic rule in this crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct ValidatorId(pub u32);

impl ValidatorId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ValidatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CommitteeError {
    #[error("committee must have at least one member")]
    EmptyCommittee,
    #[error("validator {0} has zero stake")]
    ZeroStake(ValidatorId),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Committee {
    stakes: Vec<Stake>,
    faults: usize,
}

impl Committee {
    /// Builds a committee from per-validator stakes; ids follow list position
    /// and `f` is derived as `floor((n - 1) / 3)`.
    pub fn new(stakes: &[Stake]) -> Result<Self, CommitteeError> {
        if stakes.is_empty() {
            return Err(CommitteeError::EmptyCommittee);
        }
        if let Some(i) = stakes.iter().position(|s| *s == 0) {
            return Err(CommitteeError::ZeroStake(ValidatorId(i as u32)));
        }
        Ok(Self {
            stakes: stakes.to_vec(),
            faults: (stakes.len() - 1) / 3,
        })
    }

    /// Committee of `n` validators with one stake unit each.
    pub fn equal(n: usize) -> Result<Self, CommitteeError> {
        Self::new(&alloc::vec![1; n])
    }

    pub fn size(&self) -> usize {
        self.stakes.len()
    }

    /// Maximum number of faulty validators tolerated.
    pub fn faults(&self) -> usize {
        self.faults
    }

    /// Number of distinct parents a non-genesis vertex must reference.
    pub fn quorum(&self) -> usize {
        self.size() - self.faults
    }

    /// Number of linked votes needed to commit an anchor directly.
    pub fn validity(&self) -> usize {
        self.faults + 1
    }

    pub fn stake(&self, id: ValidatorId) -> Stake {
        self.stakes[id.index()]
    }

    pub fn total_stake(&self) -> Stake {
        self.stakes.iter().sum()
    }

    /// Largest stake a faulty set may hold: `floor((total - 1) / 3)`.
    pub fn fault_stake_bound(&self) -> Stake {
        (self.total_stake() - 1) / 3
    }

    pub fn contains(&self, id: ValidatorId) -> bool {
        id.index() < self.size()
    }

    pub fn members(&self) -> impl ExactSizeIterator<Item = ValidatorId> + Clone + '_ {
        (0..self.stakes.len() as u32).map(ValidatorId)
    }

    pub fn stakes(&self) -> &[Stake] {
        &self.stakes
    }
}
