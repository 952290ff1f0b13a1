// Copyright (c) The HammerHead Simulator Authors
// SPDX-License-Identifier: Apache-2.0

//! Scenario configuration, read from TOML. Unknown keys are rejected.

use std::{fmt, path::Path};

use hammerhead_core::{
    reputation::{initial_schedule, slot_counts},
    Committee, Crash, PreGstPolicy, ReputationParams, Round, Schedule, SimParams, Time,
    ValidatorId,
};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Reputation-driven schedule switches.
    #[default]
    Hammerhead,
    /// Static rotation, never switched.
    RoundRobin,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Hammerhead => "hammerhead",
            Mode::RoundRobin => "round-robin",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stop {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_round: Option<Round>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_time: Option<Time>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub stakes: Vec<u64>,
    #[serde(default)]
    pub mode: Mode,
    /// Rounds between a schedule's first round and the anchor that may end it.
    #[serde(default = "default_t")]
    pub t: Round,
    #[serde(default = "default_exclusion")]
    pub exclusion_fraction: f64,
    /// Slot vector length; defaults to the committee size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule_length: Option<usize>,
    #[serde(default)]
    pub gst: Time,
    #[serde(default = "default_delta")]
    pub delta: Time,
    /// Defaults to `2 * delta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leader_timeout: Option<Time>,
    #[serde(default = "default_pre_gst")]
    pub pre_gst: PreGstPolicy,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub fault_plan: Vec<Crash>,
    pub stop: Stop,
    #[serde(default)]
    pub tx_rate_per_node: f64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
}

fn default_t() -> Round {
    10
}

fn default_exclusion() -> f64 {
    0.33
}

fn default_delta() -> Time {
    10
}

fn default_pre_gst() -> PreGstPolicy {
    PreGstPolicy::HoldUntilGst
}

fn default_batch() -> usize {
    100
}

/// One rejected configuration field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldError {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl SimConfig {
    /// Faultless equal-stake hammerhead config stopping at `max_round`.
    pub fn new(n: usize, max_round: Round) -> Self {
        Self {
            stakes: vec![1; n],
            mode: Mode::Hammerhead,
            t: default_t(),
            exclusion_fraction: default_exclusion(),
            schedule_length: None,
            gst: 0,
            delta: default_delta(),
            leader_timeout: None,
            pre_gst: default_pre_gst(),
            seed: 0,
            fault_plan: Vec::new(),
            stop: Stop {
                max_round: Some(max_round),
                max_time: None,
            },
            tx_rate_per_node: 0.0,
            batch_size: default_batch(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let config: Self = toml::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn n(&self) -> usize {
        self.stakes.len()
    }

    pub fn committee(&self) -> Result<Committee, HarnessError> {
        Committee::new(&self.stakes).map_err(|e| {
            HarnessError::ConfigInvalid(vec![FieldError {
                field: "stakes",
                message: e.to_string(),
            }])
        })
    }

    pub fn leader_timeout(&self) -> Time {
        self.leader_timeout.unwrap_or(2 * self.delta)
    }

    pub fn schedule_length(&self) -> usize {
        self.schedule_length.unwrap_or(self.n())
    }

    /// Validators crashed at some point of the run.
    pub fn crashed(&self) -> Vec<ValidatorId> {
        self.fault_plan.iter().map(|c| c.node).collect()
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let mut errors = Vec::new();
        let mut reject =
            |field: &'static str, message: String| errors.push(FieldError { field, message });
        if let Err(e) = Committee::new(&self.stakes) {
            reject("stakes", e.to_string());
        }
        if self.delta == 0 {
            reject("delta", "must be at least 1 tick".into());
        }
        if self.stop.max_round.is_none() && self.stop.max_time.is_none() {
            reject("stop", "set max_round or max_time".into());
        }
        if !(0.0..=1.0).contains(&self.exclusion_fraction) {
            reject("exclusion_fraction", "must lie in [0, 1]".into());
        }
        if self.schedule_length == Some(0) {
            reject("schedule_length", "must be positive".into());
        }
        if self.mode == Mode::Hammerhead && self.t == 0 {
            reject("t", "must be positive".into());
        }
        if !self.tx_rate_per_node.is_finite() || self.tx_rate_per_node < 0.0 {
            reject("tx_rate_per_node", "must be finite and non-negative".into());
        }
        if self.batch_size == 0 {
            reject("batch_size", "must be positive".into());
        }
        if let PreGstPolicy::RandomDelay { max: 0 } = self.pre_gst {
            reject("pre_gst", "random delay bound must be positive".into());
        }
        for (i, c) in self.fault_plan.iter().enumerate() {
            if c.node.index() >= self.n() {
                reject(
                    "fault_plan",
                    format!("validator {} is not in the committee", c.node.0),
                );
            }
            if self.fault_plan[..i].iter().any(|o| o.node == c.node) {
                reject(
                    "fault_plan",
                    format!("validator {} crashes twice", c.node.0),
                );
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::ConfigInvalid(errors))
        }
    }

    /// Whether the crashed stake stays within the fault bound.
    pub fn faults_within_bound(&self) -> bool {
        let Ok(committee) = Committee::new(&self.stakes) else {
            return false;
        };
        let crashed: u64 = self
            .fault_plan
            .iter()
            .filter(|c| committee.contains(c.node))
            .map(|c| committee.stake(c.node))
            .sum();
        crashed <= committee.fault_stake_bound() && self.fault_plan.len() <= committee.faults()
    }

    /// Epoch-0 schedule: seeded stake-weighted permutation in hammerhead
    /// mode, stake-weighted slots in id order for the round-robin baseline.
    pub fn initial_schedule(&self) -> Result<Schedule, HarnessError> {
        let committee = self.committee()?;
        let len = self.schedule_length();
        match self.mode {
            Mode::Hammerhead => initial_schedule(&committee, self.seed, len).map_err(|e| {
                HarnessError::ConfigInvalid(vec![FieldError {
                    field: "schedule_length",
                    message: e.to_string(),
                }])
            }),
            Mode::RoundRobin => {
                let counts = slot_counts(&committee, len);
                let max = counts.iter().copied().max().unwrap_or(0);
                // interleave: one pass per "layer" so each validator's slots spread out
                let mut slots = Vec::with_capacity(len);
                for layer in 0..max {
                    for (id, count) in committee.members().zip(&counts) {
                        if layer < *count {
                            slots.push(id);
                        }
                    }
                }
                Ok(Schedule::new(0, 0, slots).expect("non-empty, starts at round 0"))
            }
        }
    }

    pub fn sim_params(&self) -> Result<SimParams, HarnessError> {
        self.validate()?;
        let reputation = match self.mode {
            Mode::Hammerhead => Some(ReputationParams {
                switch_interval: self.t,
                exclusion_fraction: self.exclusion_fraction,
            }),
            Mode::RoundRobin => None,
        };
        Ok(SimParams {
            committee: self.committee()?,
            schedule: self.initial_schedule()?,
            reputation,
            gst: self.gst,
            delta: self.delta,
            leader_timeout: self.leader_timeout(),
            pre_gst: self.pre_gst,
            seed: self.seed,
            crashes: self.fault_plan.clone(),
            max_round: self.stop.max_round,
            max_time: self.stop.max_time,
            tx_rate_per_node: self.tx_rate_per_node,
            batch_size: self.batch_size,
        })
    }
}
