// Copyright (c) The HammerHead Simulator Authors
// SPDX-License-Identifier: Apache-2.0

use std::{path::PathBuf, process::ExitCode};

use clap::{Args, Parser, Subcommand};
use hammerhead_harness::{
    check,
    config::{Mode, SimConfig},
    scenario::{self, CheckReport, SweepGrid},
    trace_io, HarnessError,
};

const EXIT_VIOLATION: u8 = 1;
const EXIT_ERROR: u8 = 2;

#[derive(Parser)]
#[command(
    name = "hammerhead",
    version,
    about = "Deterministic DAG consensus simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its traces.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the properties of a trace directory.
    Check(CheckArgs),
    /// Run two configs over the same seeds and compare metrics.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Seeds 0..N.
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        /// Write the per-seed table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write the comparison as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Sweep committee size, fault count and T around a base config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "4,7,10")]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "10")]
        t: Vec<u64>,
        #[arg(long, default_value_t = 3)]
        seeds: u64,
        /// Every crash count from 0 to f instead of only 0 and f.
        #[arg(long)]
        all_faults: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    all: bool,
    #[arg(long)]
    total_order: bool,
    #[arg(long)]
    schedules: bool,
    #[arg(long)]
    utilization: bool,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VIOLATION),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

/// Returns whether every checked property held.
fn run(cli: Cli) -> Result<bool, HarnessError> {
    match cli.command {
        Command::Run { config, out } => {
            let config = SimConfig::load(&config)?;
            let (m, dir) = scenario::run_scenario(&config, &out)?;
            println!(
                "wrote {}: ordered {} txs, mean latency {:.2}, throughput {:.4}, skipped anchors {}",
                dir.display(),
                m.ordered_txs,
                m.latency_avg,
                m.throughput,
                m.skipped_anchor_rounds
            );
            Ok(true)
        }
        Command::Check(args) => check_cmd(args),
        Command::Compare {
            a,
            b,
            seeds,
            csv,
            json,
        } => {
            let ca = SimConfig::load(&a)?;
            let cb = SimConfig::load(&b)?;
            let seeds: Vec<u64> = (0..seeds).collect();
            let cmp = scenario::compare(&ca, &cb, &seeds)?;
            print!("{}", cmp.summary("a", "b"));
            println!(
                "delta a-b: latency {:+.3}, throughput {:+.5}",
                cmp.mean_latency_delta(),
                cmp.mean_throughput_delta()
            );
            if let Some(path) = csv {
                std::fs::write(&path, cmp.csv()).map_err(|e| HarnessError::io(&path, e))?;
            }
            if let Some(path) = json {
                let text = serde_json::to_string_pretty(&cmp).expect("comparison serializes");
                std::fs::write(&path, text + "\n").map_err(|e| HarnessError::io(&path, e))?;
            }
            Ok(true)
        }
        Command::Sweep {
            config,
            n,
            t,
            seeds,
            all_faults,
            out,
        } => {
            let base = SimConfig::load(&config)?;
            let grid = SweepGrid {
                committee_sizes: n,
                t_values: t,
                modes: vec![Mode::Hammerhead, Mode::RoundRobin],
                seeds: (0..seeds).collect(),
                all_fault_counts: all_faults,
            };
            let points = scenario::sweep(&base, &grid)?;
            std::fs::write(&out, scenario::sweep_csv(&points))
                .map_err(|e| HarnessError::io(&out, e))?;
            let unsafe_points = points.iter().filter(|p| !p.safe).count();
            println!(
                "wrote {} points to {}; {} unsafe",
                points.len(),
                out.display(),
                unsafe_points
            );
            Ok(unsafe_points == 0)
        }
    }
}

fn check_cmd(args: CheckArgs) -> Result<bool, HarnessError> {
    let traces = trace_io::read_run(&args.trace)?;
    let report = CheckReport::new(&traces);
    let none = !(args.total_order || args.schedules || args.utilization);
    let all = args.all || none;
    let mut ok = true;
    let mut line = |name: &str, verdict: &check::Verdict| {
        match verdict {
            check::Verdict::Ok => println!("{name}: ok"),
            check::Verdict::Violation { detail } => println!("{name}: VIOLATION {detail}"),
            check::Verdict::Inconclusive { detail } => println!("{name}: inconclusive ({detail})"),
        }
        ok &= !verdict.is_violation();
    };
    if all || args.total_order {
        line("total-order", &report.total_order);
    }
    if all || args.schedules {
        line("schedule-agreement", &report.schedule_agreement);
    }
    if all {
        line("reliable-broadcast", &report.reliable_broadcast);
    }
    if all || args.utilization {
        let u = &report.utilization;
        println!(
            "utilization: {} skipped anchor rounds after GST, bound {} ({} crashed){}",
            u.skipped,
            u.bound,
            u.crashed,
            if u.ok { "" } else { " EXCEEDED" }
        );
        ok &= u.ok;
    }
    if all {
        let v = &report.view_distance;
        match v.observed {
            Some(o) => println!(
                "view-distance: {o} ticks, bound {}{}",
                v.bound,
                if v.ok { "" } else { " EXCEEDED" }
            ),
            None => println!("view-distance: no post-GST epoch reached by every honest node"),
        }
        ok &= v.ok;
    }
    Ok(ok)
}
