//! The radar hypothesis generator: every way of explaining a batch of
//! measurements by false alarms, new targets and the provided tracks.

use mht_core::{Event, Fact, GeneratedHypothesis, HypothesisGenerator};

use crate::config::ScenarioConfig;
use crate::kalman::KalmanState;
use crate::model::{new_target_id, RadarEvent, TargetPositionFact, Tick};

pub type RadarHypothesis = GeneratedHypothesis<RadarEvent, TargetPositionFact>;

/// Floor for the missed-detection factor so that P_D = 1 never zeroes out
/// every hypothesis of a leaf.
pub const MIN_MISS_FACTOR: f64 = 1e-12;

/// Role of one measurement in one assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Role {
    FalseAlarm,
    NewTarget,
    /// Index into the (sorted) provided tracks.
    Track(usize),
}

/// All assignments of `m` measurements where measurement `i` may go to any
/// track in `candidates[i]` and each track takes at most one measurement.
pub fn enumerate_assignments(candidates: &[Vec<usize>]) -> Vec<Vec<Role>> {
    fn rec(
        i: usize,
        cands: &[Vec<usize>],
        used: &mut Vec<usize>,
        cur: &mut Vec<Role>,
        out: &mut Vec<Vec<Role>>,
    ) {
        if i == cands.len() {
            out.push(cur.clone());
            return;
        }
        for role in [Role::FalseAlarm, Role::NewTarget] {
            cur.push(role);
            rec(i + 1, cands, used, cur, out);
            cur.pop();
        }
        for &t in &cands[i] {
            if used.contains(&t) {
                continue;
            }
            used.push(t);
            cur.push(Role::Track(t));
            rec(i + 1, cands, used, cur, out);
            cur.pop();
            used.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, candidates, &mut Vec::new(), &mut Vec::new(), &mut out);
    out
}

/// Generator for one batch of one scan.
#[derive(Debug, Clone)]
pub struct ScanGenerator<'a> {
    pub config: &'a ScenarioConfig,
    pub tick: Tick,
    /// `(index in scan, position)`, ascending index.
    pub measurements: Vec<(usize, [f64; 2])>,
}

struct Track<'f> {
    fact: &'f TargetPositionFact,
    predicted: KalmanState,
    stale: bool,
}

impl ScanGenerator<'_> {
    fn hypotheses(&self, facts: &[Fact<TargetPositionFact>]) -> Vec<RadarHypothesis> {
        let c = self.config;
        let mut provided: Vec<&TargetPositionFact> = facts.iter().map(|f| &*f.payload).collect();
        provided.sort_by_key(|f| f.target_id);
        let tracks: Vec<Track> = provided
            .into_iter()
            .map(|fact| Track {
                fact,
                predicted: fact.predicted(self.tick, c.scan_period, c.process_noise_std),
                stale: self.tick - fact.last_detection >= c.termination_timeout as Tick,
            })
            .collect();
        let candidates: Vec<Vec<usize>> = self
            .measurements
            .iter()
            .map(|(_, z)| {
                (0..tracks.len())
                    .filter(|&t| {
                        crate::kalman::gate(
                            &tracks[t].predicted,
                            *z,
                            c.measurement_noise_std,
                            c.gate_threshold,
                        )
                    })
                    .collect()
            })
            .collect();
        let mut out = Vec::new();
        for assignment in enumerate_assignments(&candidates) {
            let mut events = Vec::new();
            let mut new_facts = Vec::new();
            let mut weight = 1.0;
            let mut assigned = vec![false; tracks.len()];
            for (&(index, z), role) in self.measurements.iter().zip(&assignment) {
                match *role {
                    Role::FalseAlarm => {
                        weight *= c.false_alarm_density();
                        events.push(RadarEvent::FalseAlarm {
                            tick: self.tick,
                            position: z,
                        });
                    }
                    Role::NewTarget => {
                        weight *= c.new_target_density();
                        let target = new_target_id(self.tick, index);
                        events.push(RadarEvent::TrackInitiated {
                            tick: self.tick,
                            target,
                            position: z,
                        });
                        new_facts.push(TargetPositionFact {
                            target_id: target,
                            state: KalmanState::initiate(
                                z,
                                c.measurement_noise_std,
                                c.initial_velocity_std,
                            ),
                            last_detection: self.tick,
                            last_measurement: z,
                        });
                    }
                    Role::Track(t) => {
                        assigned[t] = true;
                        let track = &tracks[t];
                        let update = track
                            .predicted
                            .update(z, c.measurement_noise_std)
                            .expect("gated track has a valid innovation covariance");
                        weight *= c.detection_probability * update.likelihood;
                        events.push(RadarEvent::TargetMoved {
                            tick: self.tick,
                            target: track.fact.target_id,
                            from: track.fact.state.position(),
                            to: update.state.position(),
                        });
                        new_facts.push(TargetPositionFact {
                            target_id: track.fact.target_id,
                            state: update.state,
                            last_detection: self.tick,
                            last_measurement: z,
                        });
                    }
                }
            }
            let missed: Vec<&Track> = tracks
                .iter()
                .zip(&assigned)
                .filter(|(_, a)| !**a)
                .map(|(t, _)| t)
                .collect();
            let mut variants = vec![RadarHypothesis::new(events, new_facts, weight)];
            for track in missed {
                variants = variants
                    .into_iter()
                    .flat_map(|h| missed_variants(c, self.tick, h, track.fact, track.stale))
                    .collect();
            }
            out.extend(variants);
        }
        out
    }
}

/// A track missed this scan was there but undetected, weighted by the miss
/// factor; once stale it may instead have ended, which needs no miss.
fn missed_variants(
    config: &ScenarioConfig,
    tick: Tick,
    h: RadarHypothesis,
    fact: &TargetPositionFact,
    stale: bool,
) -> Vec<RadarHypothesis> {
    let miss = (1.0 - config.detection_probability).max(MIN_MISS_FACTOR);
    let mut carry = h.clone();
    carry.facts.push(fact.clone());
    carry.probability *= miss;
    if !stale {
        return vec![carry];
    }
    let p = config.termination_probability;
    carry.probability *= 1.0 - p;
    let mut end = h;
    end.probability *= p;
    end.events.push(RadarEvent::TrackTerminated {
        tick,
        target: fact.target_id,
    });
    vec![end, carry]
}

impl HypothesisGenerator<RadarEvent, TargetPositionFact> for ScanGenerator<'_> {
    fn generate(
        &mut self,
        _events: &[Event<RadarEvent>],
        facts: &[Fact<TargetPositionFact>],
    ) -> Vec<RadarHypothesis> {
        self.hypotheses(facts)
    }
}

/// Generator for tracks no measurement gated this scan: each was missed,
/// or, once stale, may have ended.
#[derive(Debug, Clone)]
pub struct MissGenerator<'a> {
    pub config: &'a ScenarioConfig,
    pub tick: Tick,
}

impl HypothesisGenerator<RadarEvent, TargetPositionFact> for MissGenerator<'_> {
    fn generate(
        &mut self,
        _events: &[Event<RadarEvent>],
        facts: &[Fact<TargetPositionFact>],
    ) -> Vec<RadarHypothesis> {
        let mut provided: Vec<&TargetPositionFact> = facts.iter().map(|f| &*f.payload).collect();
        provided.sort_by_key(|f| f.target_id);
        let timeout = self.config.termination_timeout as Tick;
        let mut variants = vec![RadarHypothesis::empty(1.0)];
        for fact in provided {
            let stale = self.tick - fact.last_detection >= timeout;
            variants = variants
                .into_iter()
                .flat_map(|h| missed_variants(self.config, self.tick, h, fact, stale))
                .collect();
        }
        variants
    }
}

/// Drops every event from the answers of the wrapped generator.
pub struct FactsOnly<'a>(pub &'a mut dyn HypothesisGenerator<RadarEvent, TargetPositionFact>);

impl HypothesisGenerator<RadarEvent, TargetPositionFact> for FactsOnly<'_> {
    fn generate(
        &mut self,
        events: &[Event<RadarEvent>],
        facts: &[Fact<TargetPositionFact>],
    ) -> Vec<RadarHypothesis> {
        let mut out = self.0.generate(events, facts);
        for h in &mut out {
            h.events.clear();
        }
        out
    }
}
