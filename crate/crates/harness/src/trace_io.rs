// Copyright (c) The HammerHead Simulator Authors
// SPDX-License-Identifier: Apache-2.0

//! On-disk trace layout.
//!
//! A run directory holds `manifest.json` and one `node-<i>.jsonl` file per
//! validator. Each node file starts with a header line
//! `{"format":"hammerhead-trace","version":1,"node":<i>}` followed by one
//! JSON record per line. Field names:
//!
//! | kind               | fields                                    |
//! |--------------------|-------------------------------------------|
//! | `vertex-created`   | `id`, `tx_count`, `txs`                   |
//! | `vertex-delivered` | `id`                                      |
//! | `round-advanced`   | `round`                                   |
//! | `leader-timeout`   | `round`                                   |
//! | `anchor-committed` | `round`, `leader`, `direct`               |
//! | `vertex-ordered`   | `id`, `seq`                               |
//! | `schedule-switched`| `epoch`, `initial_round`, `slots`, `scores` |
//! | `stale-anchor`     | `round`                                   |
//! | `crashed`          |                                           |
//!
//! Every record also carries `node` and `at`. Vertex ids are
//! `{"round":r,"source":s}`; times are integer ticks.

use std::{
    fs,
    io::{BufRead, BufReader, BufWriter, Write},
    path::{Path, PathBuf},
};

use hammerhead_core::{Time, TraceRecord, ValidatorId};
use serde::{Deserialize, Serialize};

use crate::{config::SimConfig, HarnessError};

pub const TRACE_FORMAT: &str = "hammerhead-trace";
pub const TRACE_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceHeader {
    pub format: String,
    pub version: u32,
    pub node: ValidatorId,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub code_version: String,
    pub seed: u64,
    pub end_time: Time,
    pub config: SimConfig,
}

/// Traces of one run, indexed by validator.
#[derive(Clone, Debug, PartialEq)]
pub struct RunTraces {
    pub config: SimConfig,
    pub end_time: Time,
    pub nodes: Vec<Vec<TraceRecord>>,
}

pub fn node_file(dir: &Path, node: usize) -> PathBuf {
    dir.join(format!("node-{node}.jsonl"))
}

pub fn write_records<W: Write>(
    mut out: W,
    node: ValidatorId,
    records: &[TraceRecord],
) -> std::io::Result<()> {
    let header = TraceHeader {
        format: TRACE_FORMAT.into(),
        version: TRACE_VERSION,
        node,
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_records<R: BufRead>(input: R) -> Result<(TraceHeader, Vec<TraceRecord>), HarnessError> {
    let mut lines = input.lines();
    let first = lines
        .next()
        .ok_or_else(|| HarnessError::Parse("empty trace file".into()))?
        .map_err(|e| HarnessError::Parse(e.to_string()))?;
    let header: TraceHeader = serde_json::from_str(&first)
        .map_err(|e| HarnessError::Parse(format!("trace header: {e}")))?;
    if header.format != TRACE_FORMAT || header.version != TRACE_VERSION {
        return Err(HarnessError::Parse(format!(
            "unsupported trace {} v{}",
            header.format, header.version
        )));
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| HarnessError::Parse(e.to_string()))?;
        if line.is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line)
            .map_err(|e| HarnessError::Parse(format!("line {}: {e}", i + 2)))?;
        records.push(record);
    }
    Ok((header, records))
}

pub fn write_run(dir: &Path, traces: &RunTraces) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let manifest = Manifest {
        format: TRACE_FORMAT.into(),
        version: TRACE_VERSION,
        code_version: env!("CARGO_PKG_VERSION").into(),
        seed: traces.config.seed,
        end_time: traces.end_time,
        config: traces.config.clone(),
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(|e| HarnessError::io(&path, e))?;
    for (i, records) in traces.nodes.iter().enumerate() {
        let path = node_file(dir, i);
        let file = fs::File::create(&path).map_err(|e| HarnessError::io(&path, e))?;
        write_records(BufWriter::new(file), ValidatorId(i as u32), records)
            .map_err(|e| HarnessError::io(&path, e))?;
    }
    Ok(())
}

pub fn read_run(dir: &Path) -> Result<RunTraces, HarnessError> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| HarnessError::Parse(format!("manifest: {e}")))?;
    manifest.config.validate()?;
    let mut nodes = Vec::with_capacity(manifest.config.n());
    for i in 0..manifest.config.n() {
        let path = node_file(dir, i);
        let file = fs::File::open(&path).map_err(|e| HarnessError::io(&path, e))?;
        let (header, records) = read_records(BufReader::new(file))?;
        if header.node.index() != i {
            return Err(HarnessError::Parse(format!(
                "{} holds node {}",
                path.display(),
                header.node
            )));
        }
        nodes.push(records);
    }
    Ok(RunTraces {
        config: manifest.config,
        end_time: manifest.end_time,
        nodes,
    })
}
