//! Canned scenarios and the measures used to judge tracker runs.

use std::collections::BTreeMap;

use mht_core::{cross_product, Distribution, MhtError};

use crate::config::{Placement, ScenarioConfig, ScriptedTarget};
use crate::sim::{Scan, Simulator};
use crate::tracker::{ReferenceTracker, StepMetrics, TrackEstimate, Tracker, TrackerOptions};

/// Five targets on a grid, P_D 0.95, one false alarm per scan, 100 scans.
pub fn five_targets(seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        target_count: 5,
        detection_probability: 0.95,
        false_alarm_rate: 1.0,
        duration: 100,
        rng_seed: seed,
        placement: Placement::Grid,
        ..ScenarioConfig::default()
    }
}

/// Two targets on perpendicular straight lines that meet at the origin at
/// tick 20; no clutter.
pub fn crossing(seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        target_count: 0,
        detection_probability: 0.99,
        false_alarm_rate: 0.0,
        new_target_rate: 0.1,
        duration: 40,
        rng_seed: seed,
        targets: vec![
            ScriptedTarget {
                waypoints: vec![[0.0, -400.0, 0.0], [40.0, 400.0, 0.0]],
            },
            ScriptedTarget {
                waypoints: vec![[0.0, 0.0, -400.0], [40.0, 0.0, 400.0]],
            },
        ],
        ..ScenarioConfig::default()
    }
}

/// Small random scenario for exhaustive comparison: up to 3 targets in a
/// small disc so gates overlap often, a few scans, clutter and misses.
pub fn micro(seed: u64) -> ScenarioConfig {
    let targets = 1 + (seed % 3) as usize;
    ScenarioConfig {
        radar_radius: 400.0,
        target_count: targets,
        placement: Placement::Random,
        detection_probability: 0.85,
        false_alarm_rate: 0.4,
        new_target_rate: 0.2,
        termination_timeout: 2,
        duration: 2 + (seed / 3 % 3) as u32,
        rng_seed: seed,
        prune_k: None,
        prune_ratio: None,
        ..ScenarioConfig::default()
    }
}

/// Simulated scans of a config, at most `max_detections` each.
pub fn scans(config: &ScenarioConfig, max_detections: usize) -> Vec<Scan> {
    let mut sim = Simulator::new(config);
    (0..config.duration)
        .map(|_| {
            let mut s = sim.next_scan();
            s.detections.truncate(max_detections);
            s.origins.truncate(max_detections);
            s
        })
        .collect()
}

/// Outcome of running a tracker over a whole scenario.
#[derive(Debug, Clone)]
pub struct Run {
    pub scans: Vec<Scan>,
    pub metrics: Vec<StepMetrics>,
    /// Per scan, the best-hypothesis track of every detection.
    pub assignments: Vec<Vec<Option<u64>>>,
    /// Per scan, the tracks of the best global hypothesis.
    pub tracks: Vec<Vec<TrackEstimate>>,
}

pub fn run(config: &ScenarioConfig, options: TrackerOptions) -> Result<Run, MhtError> {
    let mut tracker = Tracker::with_options(config, options).expect("valid scenario");
    let scans = scans(config, usize::MAX);
    let mut out = Run {
        scans: Vec::new(),
        metrics: Vec::new(),
        assignments: Vec::new(),
        tracks: Vec::new(),
    };
    for scan in scans {
        out.metrics.push(tracker.step(&scan)?);
        out.assignments.push(tracker.best_assignment(&scan));
        out.tracks.push(tracker.best_tracks());
        out.scans.push(scan);
    }
    Ok(out)
}

/// Fraction of scans in which every detection of a real target is
/// explained by that target's track on the best global hypothesis. A
/// target's track is the one most often given its detections.
pub fn association_rate(run: &Run) -> f64 {
    let mut votes: BTreeMap<u64, BTreeMap<u64, usize>> = BTreeMap::new();
    for (scan, assigned) in run.scans.iter().zip(&run.assignments) {
        for (origin, track) in scan.origins.iter().zip(assigned) {
            if let (Some(o), Some(t)) = (origin, track) {
                *votes.entry(*o).or_default().entry(*t).or_default() += 1;
            }
        }
    }
    let owner: BTreeMap<u64, u64> = votes
        .into_iter()
        .map(|(o, v)| {
            (
                o,
                v.into_iter()
                    .max_by_key(|(t, n)| (*n, std::cmp::Reverse(*t)))
                    .unwrap()
                    .0,
            )
        })
        .collect();
    let good = run
        .scans
        .iter()
        .zip(&run.assignments)
        .filter(|(scan, assigned)| {
            scan.origins
                .iter()
                .zip(assigned.iter())
                .all(|(origin, track)| match origin {
                    Some(o) => track.is_some() && owner.get(o) == track.as_ref(),
                    None => true,
                })
        })
        .count();
    good as f64 / run.scans.len().max(1) as f64
}

/// Drops consecutive repeats.
pub fn compress(values: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for v in values {
        if out.last() != Some(v) {
            out.push(*v);
        }
    }
    out
}

/// Engine and reference distributions after running the same scans through
/// both, with pruning and relevance collapse off.
pub fn engine_and_reference(
    config: &ScenarioConfig,
    scans: &[Scan],
    bound: usize,
) -> Result<(Distribution, Distribution), MhtError> {
    let options = TrackerOptions {
        prune: false,
        relevance: false,
    };
    let mut tracker = Tracker::with_options(config, options).expect("valid scenario");
    let mut reference = ReferenceTracker::new(config, bound).expect("valid scenario");
    for scan in scans {
        tracker.step(scan)?;
        reference.step(scan)?;
    }
    let engine = Distribution::from_hypotheses(cross_product(tracker.world(), bound)?)
        .with_certain(tracker.certain_events());
    Ok((engine, reference.oracle().distribution()))
}
