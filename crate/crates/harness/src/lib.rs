// Copyright (c) The HammerHead Simulator Authors
// SPDX-License-Identifier: Apache-2.0

//! Scenario configs, trace files, metrics and property checkers for the
//! `hammerhead-core` simulator.

use std::path::{Path, PathBuf};

pub mod check;
pub mod config;
pub mod metrics;
pub mod scenario;
pub mod trace_io;

pub use config::{FieldError, Mode, SimConfig, Stop};
pub use metrics::Metrics;
pub use scenario::{compare, run_scenario, simulate, CheckReport, Comparison};
pub use trace_io::RunTraces;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid config: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    ConfigInvalid(Vec<FieldError>),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
