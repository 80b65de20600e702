//! Scan-by-scan driver of the engine, plus the same driver over the flat
//! reference enumerator.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use mht_core::{
    Change, Cluster, Event, Fact, FactId, HypothesisGenerator, MhtError, Oracle, Payload, World,
};

use crate::config::{ConfigError, ScenarioConfig};
use crate::generator::{FactsOnly, MissGenerator, ScanGenerator};
use crate::model::{RadarEvent, TargetPositionFact, Tick};
use crate::planner::plan_scan;
use crate::sim::Scan;

pub type RadarWorld = World<RadarEvent, TargetPositionFact>;
type FactIndex = Arc<Mutex<BTreeMap<FactId, Fact<TargetPositionFact>>>>;

/// What one scan cost and left behind.
#[derive(Debug, Clone, PartialEq)]
pub struct StepMetrics {
    pub tick: Tick,
    /// Engine plus generator time for the scan.
    pub wall_time_micros: u64,
    pub cluster_count: usize,
    pub total_leaves: usize,
    pub max_cluster_leaves: usize,
    /// Events that became certain during this scan.
    pub confirmed_events: usize,
    pub generations: usize,
}

/// A track as seen on the best global hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackEstimate {
    pub target_id: u64,
    pub position: [f64; 2],
    pub last_detection: Tick,
    pub last_measurement: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrackerOptions {
    /// Prune with the strategies of the config; off means keep every leaf.
    pub prune: bool,
    /// Collapse clusters that no longer hold any fact.
    pub relevance: bool,
}

impl Default for TrackerOptions {
    fn default() -> Self {
        Self {
            prune: true,
            relevance: true,
        }
    }
}

pub struct Tracker {
    config: ScenarioConfig,
    world: RadarWorld,
    facts: FactIndex,
    certain: Vec<Event<RadarEvent>>,
}

impl std::fmt::Debug for Tracker {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tracker")
            .field("world", &self.world)
            .finish()
    }
}

fn check_tracker_config(config: &ScenarioConfig) -> Result<(), ConfigError> {
    config.validate()?;
    if config.measurement_noise_std <= 0.0 {
        return Err(ConfigError::Invalid {
            field: "measurement_noise_std",
            reason: "the tracker needs positive measurement noise".into(),
        });
    }
    Ok(())
}

fn run_generation(
    world: &mut RadarWorld,
    facts: &BTreeSet<FactId>,
    generator: &mut dyn HypothesisGenerator<RadarEvent, TargetPositionFact>,
    emit_events: bool,
) -> Result<Vec<Event<RadarEvent>>, MhtError> {
    let report = if emit_events {
        world.generate(&BTreeSet::new(), facts, generator)?
    } else {
        world.generate(&BTreeSet::new(), facts, &mut FactsOnly(generator))?
    };
    Ok(report.certain)
}

impl Tracker {
    pub fn new(config: &ScenarioConfig) -> Result<Self, ConfigError> {
        Self::with_options(config, TrackerOptions::default())
    }

    pub fn with_options(
        config: &ScenarioConfig,
        options: TrackerOptions,
    ) -> Result<Self, ConfigError> {
        check_tracker_config(config)?;
        let strategies = if options.prune {
            config.prune_strategies()
        } else {
            Vec::new()
        };
        let mut world = RadarWorld::new(strategies);
        let facts: FactIndex = Arc::default();
        let index = facts.clone();
        world.subscribe_changes(move |change: &Change<RadarEvent, TargetPositionFact>| {
            let mut index = index.lock().expect("fact index lock");
            match change {
                Change::FactAdded(f) => {
                    index.insert(f.id, f.clone());
                }
                Change::FactRemoved(id) => {
                    index.remove(id);
                }
                _ => {}
            }
        });
        if options.relevance {
            // only facts are ever requested, so a cluster without facts is done
            world.set_relevance(|c: &Cluster<RadarEvent, TargetPositionFact>| {
                c.facts().next().is_some()
            });
        }
        Ok(Self {
            config: config.clone(),
            world,
            facts,
            certain: Vec::new(),
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn world(&self) -> &RadarWorld {
        &self.world
    }

    /// Every event confirmed so far, in confirmation order.
    pub fn certain_events(&self) -> &[Event<RadarEvent>] {
        &self.certain
    }

    /// Processes one scan: one generation per batch, then one per target
    /// that no measurement gated.
    pub fn step(&mut self, scan: &Scan) -> Result<StepMetrics, MhtError> {
        assert!(
            scan.detections.len() < 10_000,
            "too many detections for target numbering"
        );
        let started = Instant::now();
        let confirmed_before = self.certain.len();
        let live: Vec<Fact<TargetPositionFact>> = self
            .facts
            .lock()
            .expect("fact index lock")
            .values()
            .cloned()
            .collect();
        let payloads: Vec<&TargetPositionFact> = live.iter().map(|f| &*f.payload).collect();
        let plan = plan_scan(&payloads, scan, &self.config);
        let mut generations = 0;
        let emit = self.config.emit_events;
        for batch in &plan.batches {
            let requested: BTreeSet<FactId> = batch
                .facts
                .iter()
                .map(|&i| live[i].id)
                .filter(|id| self.world.cluster_of_fact(*id).is_some())
                .collect();
            let mut generator = ScanGenerator {
                config: &self.config,
                tick: scan.tick,
                measurements: batch
                    .measurements
                    .iter()
                    .map(|&j| (j, scan.detections[j]))
                    .collect(),
            };
            let certain = run_generation(&mut self.world, &requested, &mut generator, emit)?;
            self.certain.extend(certain);
            generations += 1;
        }
        for missed in &plan.missed {
            let requested: BTreeSet<FactId> = missed
                .facts
                .iter()
                .map(|&i| live[i].id)
                .filter(|id| self.world.cluster_of_fact(*id).is_some())
                .collect();
            if requested.is_empty() {
                continue;
            }
            let mut generator = MissGenerator {
                config: &self.config,
                tick: scan.tick,
            };
            let certain = run_generation(&mut self.world, &requested, &mut generator, emit)?;
            self.certain.extend(certain);
            generations += 1;
        }
        let wall_time_micros = started.elapsed().as_micros() as u64;
        Ok(StepMetrics {
            tick: scan.tick,
            wall_time_micros,
            cluster_count: self.world.cluster_count(),
            total_leaves: self.world.total_leaves(),
            max_cluster_leaves: self.world.max_cluster_leaves(),
            confirmed_events: self.certain.len() - confirmed_before,
            generations,
        })
    }

    /// Tracks of the best global hypothesis (the best leaf of every
    /// cluster), ordered by target id.
    pub fn best_tracks(&self) -> Vec<TrackEstimate> {
        let mut out: Vec<TrackEstimate> = self
            .world
            .clusters()
            .flat_map(|c| {
                let best = c.best_leaf();
                c.leaf_facts(best)
                    .map(|f| TrackEstimate {
                        target_id: f.payload.target_id,
                        position: f.payload.state.position(),
                        last_detection: f.payload.last_detection,
                        last_measurement: f.payload.last_measurement,
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        out.sort_by(|a, b| {
            a.target_id
                .cmp(&b.target_id)
                .then(a.last_detection.cmp(&b.last_detection))
        });
        out
    }

    /// For each detection of `scan`, the track the best global hypothesis
    /// explains it with (`None` when it is taken for clutter). Only valid
    /// right after stepping `scan`.
    pub fn best_assignment(&self, scan: &Scan) -> Vec<Option<u64>> {
        let tracks = self.best_tracks();
        scan.detections
            .iter()
            .map(|z| {
                tracks
                    .iter()
                    .find(|t| t.last_detection == scan.tick && t.last_measurement == *z)
                    .map(|t| t.target_id)
            })
            .collect()
    }
}

/// The tracker's scan logic over the flat enumerator, for equivalence
/// checks. No pruning, no relevance collapse.
pub struct ReferenceTracker {
    config: ScenarioConfig,
    oracle: Oracle<RadarEvent, TargetPositionFact>,
}

impl std::fmt::Debug for ReferenceTracker {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReferenceTracker")
            .field("oracle", &self.oracle)
            .finish()
    }
}

impl ReferenceTracker {
    pub fn new(config: &ScenarioConfig, bound: usize) -> Result<Self, ConfigError> {
        check_tracker_config(config)?;
        Ok(Self {
            config: config.clone(),
            oracle: Oracle::new(bound),
        })
    }

    pub fn oracle(&self) -> &Oracle<RadarEvent, TargetPositionFact> {
        &self.oracle
    }

    pub fn step(&mut self, scan: &Scan) -> Result<(), MhtError> {
        // identical payloads are indistinguishable to the generator
        let mut live: Vec<Fact<TargetPositionFact>> = Vec::new();
        let mut seen = BTreeSet::new();
        for f in self.oracle.facts() {
            if seen.insert(f.payload.encode()) {
                live.push(f);
            }
        }
        let payloads: Vec<&TargetPositionFact> = live.iter().map(|f| &*f.payload).collect();
        let plan = plan_scan(&payloads, scan, &self.config);
        let emit = self.config.emit_events;
        let no_events = |_: &Event<RadarEvent>| false;
        for batch in &plan.batches {
            let wanted: BTreeSet<Vec<u8>> = batch
                .facts
                .iter()
                .map(|&i| live[i].payload.encode())
                .collect();
            let mut generator = ScanGenerator {
                config: &self.config,
                tick: scan.tick,
                measurements: batch
                    .measurements
                    .iter()
                    .map(|&j| (j, scan.detections[j]))
                    .collect(),
            };
            let select = |f: &Fact<TargetPositionFact>| wanted.contains(&f.payload.encode());
            if emit {
                self.oracle.generate(&no_events, &select, &mut generator)?;
            } else {
                self.oracle
                    .generate(&no_events, &select, &mut FactsOnly(&mut generator))?;
            }
        }
        for missed in &plan.missed {
            let wanted: BTreeSet<Vec<u8>> = missed
                .facts
                .iter()
                .map(|&i| live[i].payload.encode())
                .collect();
            let present = self
                .oracle
                .facts()
                .iter()
                .any(|f| wanted.contains(&f.payload.encode()));
            if !present {
                continue;
            }
            let mut generator = MissGenerator {
                config: &self.config,
                tick: scan.tick,
            };
            let select = |f: &Fact<TargetPositionFact>| wanted.contains(&f.payload.encode());
            if emit {
                self.oracle.generate(&no_events, &select, &mut generator)?;
            } else {
                self.oracle
                    .generate(&no_events, &select, &mut FactsOnly(&mut generator))?;
            }
        }
        Ok(())
    }
}
