//! Runs radar scenarios through the tracker and records what each scan cost.
//!
//! Output files, all in the chosen directory:
//!
//! * `metrics.csv`: one row per scan with columns `tick, wall_time_micros,
//!   cluster_count, total_leaves, max_cluster_leaves, confirmed_event_count`.
//! * `tracks.jsonl`: one line per track of the best global hypothesis per
//!   scan, `{"tick", "id", "x", "y"}`.
//! * `truth.jsonl`: one line per live simulated target per scan, same keys.
//! * `sweep.csv`: `target_count, mean_time_micros, stddev_micros,
//!   max_cluster_leaves`, one row per target count.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use mht_core::MhtError;
use mht_radar::{ConfigError, RadarEvent, ScenarioConfig, Simulator, Tracker};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("engine failure: {0}")]
    Engine(#[from] MhtError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// One `metrics.csv` row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub tick: i64,
    pub wall_time_micros: u64,
    pub cluster_count: usize,
    pub total_leaves: usize,
    pub max_cluster_leaves: usize,
    pub confirmed_event_count: usize,
}

/// One `tracks.jsonl` or `truth.jsonl` line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionLine {
    pub tick: i64,
    pub id: u64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Over the scans after warm-up.
    pub mean_time_micros: f64,
    pub stddev_micros: f64,
    pub peak_leaves: usize,
    pub peak_cluster_leaves: usize,
    /// Track initiations that became certain.
    pub confirmed_tracks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub rows: Vec<MetricsRow>,
    pub summary: Summary,
    pub tracks: Vec<PositionLine>,
    pub truth: Vec<PositionLine>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Scans left out of the timing statistics.
    pub warmup: usize,
    /// Record wall time; off writes zeros so output is reproducible.
    pub timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            warmup: 5,
            timing: true,
        }
    }
}

/// Mean and population standard deviation; zeros when empty.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Simulates `config.duration` scans and feeds each to the tracker. Only the
/// tracker step is timed.
pub fn run_scenario(config: &ScenarioConfig, options: RunOptions) -> Result<RunReport, BenchError> {
    let mut tracker = Tracker::new(config)?;
    let mut sim = Simulator::new(config);
    let mut rows = Vec::with_capacity(config.duration as usize);
    let mut tracks = Vec::new();
    let mut truth = Vec::new();
    for _ in 0..config.duration {
        for t in sim.truth().iter().filter(|t| t.alive) {
            truth.push(PositionLine {
                tick: sim.tick(),
                id: t.id,
                x: t.position[0],
                y: t.position[1],
            });
        }
        let scan = sim.next_scan();
        let m = tracker.step(&scan)?;
        rows.push(MetricsRow {
            tick: m.tick,
            wall_time_micros: if options.timing {
                m.wall_time_micros
            } else {
                0
            },
            cluster_count: m.cluster_count,
            total_leaves: m.total_leaves,
            max_cluster_leaves: m.max_cluster_leaves,
            confirmed_event_count: m.confirmed_events,
        });
        for t in tracker.best_tracks() {
            tracks.push(PositionLine {
                tick: scan.tick,
                id: t.target_id,
                x: t.position[0],
                y: t.position[1],
            });
        }
    }
    let times: Vec<f64> = rows
        .iter()
        .skip(options.warmup)
        .map(|r| r.wall_time_micros as f64)
        .collect();
    let (mean_time_micros, stddev_micros) = mean_std(&times);
    let confirmed_tracks = tracker
        .certain_events()
        .iter()
        .filter(|e| matches!(*e.payload, RadarEvent::TrackInitiated { .. }))
        .count();
    let summary = Summary {
        mean_time_micros,
        stddev_micros,
        peak_leaves: rows.iter().map(|r| r.total_leaves).max().unwrap_or(0),
        peak_cluster_leaves: rows.iter().map(|r| r.max_cluster_leaves).max().unwrap_or(0),
        confirmed_tracks,
    };
    Ok(RunReport {
        rows,
        summary,
        tracks,
        truth,
    })
}

/// Writes `metrics.csv`, `tracks.jsonl` and `truth.jsonl` into `dir`.
pub fn write_run(report: &RunReport, dir: &Path) -> Result<(), BenchError> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("metrics.csv"))?;
    for row in &report.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    write_jsonl(&report.tracks, &dir.join("tracks.jsonl"))?;
    write_jsonl(&report.truth, &dir.join("truth.jsonl"))?;
    Ok(())
}

fn write_jsonl(lines: &[PositionLine], path: &Path) -> Result<(), BenchError> {
    let mut out = BufWriter::new(File::create(path)?);
    for line in lines {
        serde_json::to_writer(&mut out, line)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>, BenchError> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<Result<Vec<MetricsRow>, _>>()?;
    Ok(rows)
}

/// One `sweep.csv` row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub target_count: usize,
    pub mean_time_micros: f64,
    pub stddev_micros: f64,
    pub max_cluster_leaves: usize,
}

/// Target count each `base` config is sized for.
pub const SWEEP_BASE_TARGETS: usize = 10;

/// `base` scaled to `targets` at the same target density and clutter per
/// unit area: the area grows with the count.
pub fn sweep_config(base: &ScenarioConfig, targets: usize) -> ScenarioConfig {
    let scale = targets as f64 / SWEEP_BASE_TARGETS as f64;
    ScenarioConfig {
        target_count: targets,
        radar_radius: base.radar_radius * scale.sqrt(),
        false_alarm_rate: base.false_alarm_rate * scale,
        new_target_rate: base.new_target_rate * scale,
        ..base.clone()
    }
}

/// Runs every count `reps` times with seeds `base.rng_seed + rep`, so each
/// count sees the same seed schedule. Counts run one after the other.
pub fn scaling_sweep(
    base: &ScenarioConfig,
    counts: &[usize],
    reps: usize,
    warmup: usize,
) -> Result<Vec<SweepRow>, BenchError> {
    let mut out = Vec::with_capacity(counts.len());
    for &n in counts {
        let mut times = Vec::new();
        let mut max_cluster_leaves = 0;
        for rep in 0..reps.max(1) {
            let mut config = sweep_config(base, n);
            config.rng_seed = base.rng_seed.wrapping_add(rep as u64);
            let report = run_scenario(
                &config,
                RunOptions {
                    warmup,
                    timing: true,
                },
            )?;
            times.extend(
                report
                    .rows
                    .iter()
                    .skip(warmup)
                    .map(|r| r.wall_time_micros as f64),
            );
            max_cluster_leaves = max_cluster_leaves.max(report.summary.peak_cluster_leaves);
        }
        let (mean_time_micros, stddev_micros) = mean_std(&times);
        out.push(SweepRow {
            target_count: n,
            mean_time_micros,
            stddev_micros,
            max_cluster_leaves,
        });
    }
    Ok(out)
}

pub fn write_sweep(rows: &[SweepRow], path: &Path) -> Result<(), BenchError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sweep(path: &Path) -> Result<Vec<SweepRow>, BenchError> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<Result<Vec<SweepRow>, _>>()?;
    Ok(rows)
}
