//! Per-scan CSV reports and the run manifest.
//!
//! Rows are flushed after every scan so an interrupted run leaves complete,
//! parseable files behind.

use num_bigint::BigUint;
use rfisst::association::count_associations;
use rfisst::scenario::{Method, ScanRecord};
use serde::Serialize;
use std::fs::File;
use std::io;
use std::path::{Path, PathBuf};

pub const WEIGHTS_HEADER: [&str; 3] = ["scan", "hypothesis_id", "weight"];
pub const CARDINALITY_HEADER: [&str; 5] = ["scan", "n", "probability", "mean", "mode"];
pub const ESTIMATES_HEADER: [&str; 4] = ["scan", "object", "match_distance_km", "hit"];
pub const TIMING_HEADER: [&str; 7] = ["M", "m", "A_M", "method", "nanoseconds", "steps", "break"];

pub const WEIGHTS_FILE: &str = "weights.csv";
pub const CARDINALITY_FILE: &str = "cardinality.csv";
pub const ESTIMATES_FILE: &str = "estimates.csv";
pub const TIMING_FILE: &str = "timing.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn method_name(m: Method) -> &'static str {
    match m {
        Method::Rfisst => "rfisst",
        Method::Homht => "homht",
    }
}

fn writer(dir: &Path, name: &str, header: &[&str]) -> io::Result<csv::Writer<File>> {
    let mut w = csv::Writer::from_path(dir.join(name))?;
    w.write_record(header)?;
    w.flush()?;
    Ok(w)
}

/// One row of timing.csv.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub n_tracks: usize,
    pub m: usize,
    pub a_m: BigUint,
    pub method: Method,
    pub nanoseconds: Option<u64>,
    pub steps: Option<u64>,
    pub broke: bool,
}

impl TimingRow {
    pub fn record(&self) -> [String; 7] {
        let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
        [
            self.n_tracks.to_string(),
            self.m.to_string(),
            self.a_m.to_string(),
            method_name(self.method).to_string(),
            opt(self.nanoseconds),
            opt(self.steps),
            self.broke.to_string(),
        ]
    }
}

pub fn write_timing_csv(path: &Path, rows: &[TimingRow]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TIMING_HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush()
}

/// Streaming writer for the four per-scan CSV files of a run.
pub struct ScanReports {
    weights: csv::Writer<File>,
    cardinality: csv::Writer<File>,
    estimates: csv::Writer<File>,
    timing: csv::Writer<File>,
    method: Method,
    wall_clock: bool,
}

impl ScanReports {
    /// Creates the files with their headers. Wall-clock times are written
    /// only when `wall_clock` is set; otherwise the column stays empty so
    /// repeated runs are byte-identical.
    pub fn create(dir: &Path, method: Method, wall_clock: bool) -> io::Result<Self> {
        Ok(Self {
            weights: writer(dir, WEIGHTS_FILE, &WEIGHTS_HEADER)?,
            cardinality: writer(dir, CARDINALITY_FILE, &CARDINALITY_HEADER)?,
            estimates: writer(dir, ESTIMATES_FILE, &ESTIMATES_HEADER)?,
            timing: writer(dir, TIMING_FILE, &TIMING_HEADER)?,
            method,
            wall_clock,
        })
    }

    pub fn write_scan(&mut self, rec: &ScanRecord) -> io::Result<()> {
        let r = &rec.report;
        let scan = r.scan.to_string();
        for (id, w) in &r.weights {
            self.weights
                .write_record([scan.as_str(), &id.to_string(), &w.to_string()])?;
        }
        let c = &r.cardinality;
        for (n, p) in &c.distribution {
            self.cardinality.write_record([
                scan.as_str(),
                &n.to_string(),
                &p.to_string(),
                &c.mean.to_string(),
                &c.mode.to_string(),
            ])?;
        }
        for o in &rec.classification.objects {
            self.estimates.write_record([
                scan.as_str(),
                &o.object.to_string(),
                &o.distance_km.map(|d| d.to_string()).unwrap_or_default(),
                &o.hit.to_string(),
            ])?;
        }
        let (n, m) = r.largest_problem;
        let row = TimingRow {
            n_tracks: n,
            m,
            a_m: count_associations(m, n),
            method: self.method,
            nanoseconds: self.wall_clock.then_some(r.generation_ns),
            steps: Some(r.mcmc_steps),
            broke: false,
        };
        self.timing.write_record(row.record())?;
        self.flush()
    }

    /// Records the scan at which HOMHT gave up.
    pub fn write_break(&mut self, n_tracks: usize, m: usize) -> io::Result<()> {
        let row = TimingRow {
            n_tracks,
            m,
            a_m: count_associations(m, n_tracks),
            method: self.method,
            nanoseconds: None,
            steps: None,
            broke: true,
        };
        self.timing.write_record(row.record())?;
        self.flush()
    }

    fn flush(&mut self) -> io::Result<()> {
        self.weights.flush()?;
        self.cardinality.flush()?;
        self.estimates.flush()?;
        self.timing.flush()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Completed,
    HomhtBreak,
    Failed,
}

/// Run manifest: what was run, with which settings, and how it ended.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub mode: &'static str,
    pub seed: u64,
    pub flags: serde_json::Value,
    pub scenario: Option<serde_json::Value>,
    pub status: RunStatus,
    pub scans_completed: u32,
    pub total_scans: Option<u32>,
    pub reason: Option<String>,
    pub files: Vec<&'static str>,
}

impl Manifest {
    pub fn new(mode: &'static str, seed: u64, flags: serde_json::Value) -> Self {
        Self {
            tool: "rfisst",
            version: env!("CARGO_PKG_VERSION"),
            mode,
            seed,
            flags,
            scenario: None,
            status: RunStatus::Running,
            scans_completed: 0,
            total_scans: None,
            reason: None,
            files: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> io::Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        text.push('\n');
        std::fs::write(&path, text)?;
        Ok(path)
    }
}
