//! Command-line front end: scenario runs with CSV reports, the generation
//! timing benchmark and the oracle comparison.

pub mod bench;
pub mod oracle_check;
pub mod report;

use clap::{Args, Parser, Subcommand, ValueEnum};
use report::{Manifest, RunStatus, ScanReports};
use rfisst::association::{DEFAULT_ENUMERATION_CAP, DEFAULT_GATE};
use rfisst::scenario::{generate_scenario, run_scenario, Method, RunError, RunOptions, ScenarioConfig};
use serde::Serialize;
use std::cell::RefCell;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(name = "rfisst", version, about = "Hypothesis-level multi-object tracker")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario, the timing benchmark (--bench) or the oracle check (--oracle-check).
    Run(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    Rfisst,
    Homht,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Rfisst => Method::Rfisst,
            MethodArg::Homht => Method::Homht,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RunArgs {
    /// Scenario JSON file.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "rfisst")]
    pub method: MethodArg,
    /// Master seed; overrides the scenario's own seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// MCMC steps per branch, burn-in included.
    #[arg(long, default_value_t = 100_000)]
    pub mcmc_steps: u64,
    /// Defaults to a tenth of the step count.
    #[arg(long)]
    pub burn_in: Option<u64>,
    /// Distinct children kept per branch.
    #[arg(long, default_value_t = 10)]
    pub max_children: usize,
    /// Hypotheses kept after each scan.
    #[arg(long, default_value_t = 10)]
    pub h_inf: usize,
    /// Mahalanobis gate at 25; off for rfisst and on for homht by default.
    #[arg(long, value_enum)]
    pub gate: Option<Switch>,
    /// Largest association count HOMHT will enumerate.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub enum_cap: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Timing benchmark instead of a scenario run.
    #[arg(long, conflicts_with = "oracle_check")]
    pub bench: bool,
    /// Benchmark sizes as `MxM` pairs, e.g. `4x3,8x8`.
    #[arg(long, value_delimiter = ',', requires = "bench")]
    pub sizes: Vec<String>,
    /// Compare the engine against the brute-force oracles.
    #[arg(long)]
    pub oracle_check: bool,
    #[arg(long, default_value_t = 100, requires = "oracle_check")]
    pub oracle_instances: usize,
    /// Record generation wall-clock times in timing.csv.
    #[arg(long)]
    pub wall_clock: bool,
    /// Worker threads; the output does not depend on it.
    #[arg(long, env = "RFISST_THREADS")]
    #[serde(skip)]
    pub threads: Option<usize>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("HOMHT break at scan {scan}: {reason}")]
    HomhtBreak { scan: u32, reason: String },
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::HomhtBreak { .. } => 3,
            CliError::Io(_) | CliError::Failed(_) => 1,
        }
    }
}

/// Human-readable summary of a finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub summary: String,
}

fn parse_sizes(sizes: &[String]) -> Result<Vec<(usize, usize)>, CliError> {
    sizes
        .iter()
        .map(|s| {
            let (a, b) = s
                .split_once(['x', 'X'])
                .ok_or_else(|| CliError::Config(format!("size {s:?} is not of the form MxM")))?;
            let p = |v: &str| {
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| CliError::Config(format!("size {s:?} is not of the form MxM")))
            };
            Ok((p(a)?, p(b)?))
        })
        .collect()
}

fn flags_json(args: &RunArgs) -> serde_json::Value {
    serde_json::to_value(args).expect("flags serialize")
}

pub fn execute(args: &RunArgs) -> Result<Outcome, CliError> {
    std::fs::create_dir_all(&args.out)?;
    if args.bench {
        run_bench(args)
    } else if args.oracle_check {
        run_oracle_check(args)
    } else {
        run_scenario_cmd(args)
    }
}

fn run_bench(args: &RunArgs) -> Result<Outcome, CliError> {
    let seed = args.seed.unwrap_or(0);
    let mut cfg = bench::BenchConfig {
        seed,
        mcmc_steps: args.mcmc_steps,
        max_children: args.max_children,
        enumeration_cap: args.enum_cap,
        ..bench::BenchConfig::default()
    };
    if !args.sizes.is_empty() {
        cfg.sizes = parse_sizes(&args.sizes)?;
    }
    let mut manifest = Manifest::new("bench", seed, flags_json(args));
    manifest.write(&args.out)?;
    let rows = bench::timing_benchmark(&cfg);
    report::write_timing_csv(&args.out.join(report::TIMING_FILE), &rows)?;
    manifest.status = RunStatus::Completed;
    manifest.files = vec![report::TIMING_FILE];
    manifest.write(&args.out)?;
    let breaks = rows.iter().filter(|r| r.broke).count();
    Ok(Outcome {
        summary: format!(
            "{} timing rows ({breaks} HOMHT breaks) in {}",
            rows.len(),
            args.out.display()
        ),
    })
}

fn run_oracle_check(args: &RunArgs) -> Result<Outcome, CliError> {
    let seed = args.seed.unwrap_or(0);
    let mut manifest = Manifest::new("oracle-check", seed, flags_json(args));
    manifest.write(&args.out)?;
    let s = oracle_check::oracle_check(args.oracle_instances, seed).map_err(|e| CliError::Failed(e.to_string()))?;
    let mut text = serde_json::to_string_pretty(&s).map_err(|e| CliError::Failed(e.to_string()))?;
    text.push('\n');
    std::fs::write(args.out.join("oracle.json"), text)?;
    let ok = s.max_deviation() < 1e-10;
    manifest.status = if ok { RunStatus::Completed } else { RunStatus::Failed };
    manifest.files = vec!["oracle.json"];
    manifest.write(&args.out)?;
    let summary = format!(
        "oracle check: {} + {} instances, max deviation {:e}, max pdf error {:e}",
        s.instances,
        s.fisst_instances,
        s.max_deviation(),
        s.max_pdf_error_brute_force.max(s.max_pdf_error_fisst)
    );
    if ok {
        Ok(Outcome { summary })
    } else {
        Err(CliError::Failed(summary))
    }
}

fn load_scenario(path: &Path, seed: Option<u64>) -> Result<ScenarioConfig, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = ScenarioConfig::from_json(&text).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run_scenario_cmd(args: &RunArgs) -> Result<Outcome, CliError> {
    let path = args
        .scenario
        .as_ref()
        .ok_or_else(|| CliError::Config("--scenario is required unless --bench or --oracle-check is given".into()))?;
    let cfg = load_scenario(path, args.seed)?;
    let method = Method::from(args.method);
    let gate = match args.gate {
        Some(Switch::On) => Some(DEFAULT_GATE),
        Some(Switch::Off) => None,
        None => RunOptions::for_method(method).gate,
    };
    let run = RunOptions {
        method,
        seed: cfg.seed,
        mcmc_steps: args.mcmc_steps,
        burn_in: args.burn_in,
        max_children: args.max_children,
        h_inf: args.h_inf,
        gate,
        enumeration_cap: args.enum_cap,
    };
    run.scan_options(cfg.scan_interval_s)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let scn = generate_scenario(&cfg).map_err(|e| CliError::Config(e.to_string()))?;

    let mut manifest = Manifest::new("run", cfg.seed, flags_json(args));
    manifest.scenario = Some(serde_json::to_value(&cfg).map_err(|e| CliError::Failed(e.to_string()))?);
    manifest.total_scans = Some(scn.total_scans());
    manifest.files = vec![
        report::WEIGHTS_FILE,
        report::CARDINALITY_FILE,
        report::ESTIMATES_FILE,
        report::TIMING_FILE,
    ];
    manifest.write(&args.out)?;

    let reports = RefCell::new(ScanReports::create(&args.out, method, args.wall_clock)?);
    let io_error = RefCell::new(None);
    let last = RefCell::new((0u32, scn.initial.hypotheses[0].tracks.len()));
    let result = run_scenario(&scn, &run, |rec| {
        if io_error.borrow().is_none() {
            if let Err(e) = reports.borrow_mut().write_scan(rec) {
                *io_error.borrow_mut() = Some(e);
            }
        }
        *last.borrow_mut() = (rec.report.scan, rec.top.tracks.len());
    });
    if let Some(e) = io_error.into_inner() {
        return Err(e.into());
    }
    let (scans_done, top_tracks) = last.into_inner();
    manifest.scans_completed = scans_done;
    match result {
        Ok(forest) => {
            manifest.status = RunStatus::Completed;
            manifest.write(&args.out)?;
            let card = rfisst::scenario::cardinality(&forest);
            Ok(Outcome {
                summary: format!(
                    "{} scans, final object count mode {} (mean {:.3}), reports in {}",
                    scans_done,
                    card.mode,
                    card.mean,
                    args.out.display()
                ),
            })
        }
        Err(RunError::HomhtBreak { scan, reason }) => {
            let m = scn.scan_measurements(scan).len();
            reports.borrow_mut().write_break(top_tracks, m)?;
            manifest.status = RunStatus::HomhtBreak;
            manifest.reason = Some(format!("scan {scan}: {reason}"));
            manifest.write(&args.out)?;
            Err(CliError::HomhtBreak { scan, reason })
        }
        Err(e @ RunError::Engine { .. }) => {
            manifest.status = RunStatus::Failed;
            manifest.reason = Some(e.to_string());
            manifest.write(&args.out)?;
            Err(CliError::Failed(e.to_string()))
        }
    }
}
