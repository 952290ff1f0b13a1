// Copyright (c) The HammerHead Simulator Authors
// SPDX-License-Identifier: Apache-2.0

//! Scenario runs, paired comparisons and parameter sweeps.

use std::{
    fmt::Write as _,
    path::{Path, PathBuf},
};

use hammerhead_core::{simnet, Crash, ValidatorId};
use serde::Serialize;

use crate::{
    check,
    config::{Mode, SimConfig},
    metrics::{self, Metrics},
    trace_io::{self, RunTraces},
    HarnessError,
};

/// Runs the simulator in memory.
pub fn simulate(config: &SimConfig) -> Result<RunTraces, HarnessError> {
    let params = config.sim_params()?;
    let result = simnet::run(params).map_err(|e| {
        HarnessError::ConfigInvalid(vec![crate::config::FieldError {
            field: "config",
            message: e.to_string(),
        }])
    })?;
    Ok(RunTraces {
        config: config.clone(),
        end_time: result.end_time,
        nodes: result.traces,
    })
}

/// Runs `config`, writes its traces under `out`, and returns the metrics and
/// the run directory.
pub fn run_scenario(config: &SimConfig, out: &Path) -> Result<(Metrics, PathBuf), HarnessError> {
    let traces = simulate(config)?;
    trace_io::write_run(out, &traces)?;
    let metrics = metrics::compute(&traces);
    let path = out.join("metrics.json");
    let text = serde_json::to_string_pretty(&metrics).expect("metrics serialize");
    std::fs::write(&path, text + "\n").map_err(|e| HarnessError::io(&path, e))?;
    Ok((metrics, out.to_path_buf()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub seed: u64,
    pub a: Metrics,
    pub b: Metrics,
    pub latency_delta: f64,
    pub throughput_delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub mean_latency_a: f64,
    pub mean_latency_b: f64,
    pub mean_throughput_a: f64,
    pub mean_throughput_b: f64,
}

impl Comparison {
    pub fn mean_latency_delta(&self) -> f64 {
        self.mean_latency_a - self.mean_latency_b
    }

    pub fn mean_throughput_delta(&self) -> f64 {
        self.mean_throughput_a - self.mean_throughput_b
    }

    pub fn summary(&self, label_a: &str, label_b: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "seed  latency[{label_a}]  latency[{label_b}]  tput[{label_a}]  tput[{label_b}]"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>4}  {:>12.2}  {:>12.2}  {:>10.4}  {:>10.4}",
                r.seed, r.a.latency_avg, r.b.latency_avg, r.a.throughput, r.b.throughput
            );
        }
        let _ = writeln!(
            s,
            "mean  {:>12.2}  {:>12.2}  {:>10.4}  {:>10.4}",
            self.mean_latency_a,
            self.mean_latency_b,
            self.mean_throughput_a,
            self.mean_throughput_b
        );
        s
    }

    pub fn csv(&self) -> String {
        let mut s = String::from(
            "seed,latency_a,latency_b,throughput_a,throughput_b,skipped_a,skipped_b,latency_delta,throughput_delta\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                r.seed,
                r.a.latency_avg,
                r.b.latency_avg,
                r.a.throughput,
                r.b.throughput,
                r.a.skipped_anchor_rounds,
                r.b.skipped_anchor_rounds,
                r.latency_delta,
                r.throughput_delta
            );
        }
        s
    }
}

/// Runs both configs once per seed (overriding their `seed`) and tabulates
/// the metric deltas `a - b`.
pub fn compare(a: &SimConfig, b: &SimConfig, seeds: &[u64]) -> Result<Comparison, HarnessError> {
    let mut rows = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let ma = metrics::compute(&simulate(&SimConfig { seed, ..a.clone() })?);
        let mb = metrics::compute(&simulate(&SimConfig { seed, ..b.clone() })?);
        rows.push(ComparisonRow {
            seed,
            latency_delta: ma.latency_avg - mb.latency_avg,
            throughput_delta: ma.throughput - mb.throughput,
            a: ma,
            b: mb,
        });
    }
    let mean = |f: &dyn Fn(&ComparisonRow) -> f64| {
        if rows.is_empty() {
            0.0
        } else {
            rows.iter().map(f).sum::<f64>() / rows.len() as f64
        }
    };
    Ok(Comparison {
        mean_latency_a: mean(&|r| r.a.latency_avg),
        mean_latency_b: mean(&|r| r.b.latency_avg),
        mean_throughput_a: mean(&|r| r.a.throughput),
        mean_throughput_b: mean(&|r| r.b.throughput),
        rows,
    })
}

/// Verdicts of every checker on one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub total_order: check::Verdict,
    pub schedule_agreement: check::Verdict,
    pub reliable_broadcast: check::Verdict,
    pub utilization: check::UtilizationReport,
    pub view_distance: check::ViewDistanceReport,
}

impl CheckReport {
    pub fn new(traces: &RunTraces) -> Self {
        Self {
            total_order: check::total_order_verdict(traces),
            schedule_agreement: check::check_schedule_agreement(traces),
            reliable_broadcast: check::check_reliable_broadcast(traces),
            utilization: check::check_leader_utilization(traces),
            view_distance: check::check_view_distance(traces),
        }
    }

    /// Safety properties only; utilization and view distance are reported.
    pub fn safe(&self) -> bool {
        !self.total_order.is_violation()
            && !self.schedule_agreement.is_violation()
            && !self.reliable_broadcast.is_violation()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub n: usize,
    pub crashes: usize,
    pub t: u64,
    pub mode: Mode,
    pub seed: u64,
    pub metrics: Metrics,
    pub safe: bool,
    pub utilization_ok: bool,
}

#[derive(Clone, Debug)]
pub struct SweepGrid {
    pub committee_sizes: Vec<usize>,
    pub t_values: Vec<u64>,
    pub modes: Vec<Mode>,
    pub seeds: Vec<u64>,
    /// Every crash count from 0 to f when true; only 0 and f otherwise.
    pub all_fault_counts: bool,
}

/// Crashes the highest-id validators at GST.
pub fn with_crashes(base: &SimConfig, crashes: usize) -> SimConfig {
    let n = base.n();
    SimConfig {
        fault_plan: (0..crashes)
            .map(|k| Crash {
                node: ValidatorId((n - 1 - k) as u32),
                at: base.gst,
            })
            .collect(),
        ..base.clone()
    }
}

pub fn sweep(base: &SimConfig, grid: &SweepGrid) -> Result<Vec<SweepPoint>, HarnessError> {
    let mut points = Vec::new();
    for &n in &grid.committee_sizes {
        let f = (n.max(1) - 1) / 3;
        let fault_counts: Vec<usize> = if grid.all_fault_counts {
            (0..=f).collect()
        } else {
            vec![0, f]
        };
        for &crashes in fault_counts
            .iter()
            .collect::<std::collections::BTreeSet<_>>()
        {
            for &t in &grid.t_values {
                for &mode in &grid.modes {
                    for &seed in &grid.seeds {
                        let config = with_crashes(
                            &SimConfig {
                                stakes: vec![1; n],
                                t,
                                mode,
                                seed,
                                ..base.clone()
                            },
                            crashes,
                        );
                        let traces = simulate(&config)?;
                        let report = CheckReport::new(&traces);
                        points.push(SweepPoint {
                            n,
                            crashes,
                            t,
                            mode,
                            seed,
                            metrics: metrics::compute(&traces),
                            safe: report.safe(),
                            utilization_ok: report.utilization.ok,
                        });
                    }
                }
            }
        }
    }
    Ok(points)
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut s = String::from(
        "n,crashes,t,mode,seed,latency_avg,latency_p50,latency_p95,throughput,ordered_txs,skipped_anchor_rounds,skipped_after_gst,min_epoch,epoch_switch_lag_max,safe,utilization_ok\n",
    );
    for p in points {
        let m = &p.metrics;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            p.n,
            p.crashes,
            p.t,
            p.mode,
            p.seed,
            m.latency_avg,
            m.latency_p50,
            m.latency_p95,
            m.throughput,
            m.ordered_txs,
            m.skipped_anchor_rounds,
            m.skipped_after_gst,
            m.min_epoch,
            m.epoch_switch_lag_max
                .map_or(String::new(), |l| l.to_string()),
            p.safe,
            p.utilization_ok
        );
    }
    s
}
