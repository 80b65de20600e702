//! Splits a scan into generation calls. Measurements that gate a common
//! track must be explained together, so batches are the connected
//! components of the measurement/track gating graph.

use std::collections::{BTreeMap, HashMap};

use mht_core::union_find::UnionFind;

use crate::config::ScenarioConfig;
use crate::model::TargetPositionFact;
use crate::sim::Scan;

/// One generation call: measurement indices into the scan, fact indices
/// into the planner input. Both ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub measurements: Vec<usize>,
    pub facts: Vec<usize>,
}

/// Facts of one target that no measurement gated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Missed {
    pub target: u64,
    pub facts: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScanPlan {
    /// Ordered by first measurement.
    pub batches: Vec<Batch>,
    /// Ordered by target id.
    pub missed: Vec<Missed>,
}

fn cell(p: [f64; 2], size: f64) -> (i64, i64) {
    ((p[0] / size).floor() as i64, (p[1] / size).floor() as i64)
}

/// Plans the generations for `scan` given every live fact.
pub fn plan_scan(facts: &[&TargetPositionFact], scan: &Scan, config: &ScenarioConfig) -> ScanPlan {
    let m = scan.detections.len();
    let size = (config.radar_radius / 64.0).max(1.0);
    let predicted: Vec<_> = facts
        .iter()
        .map(|f| f.predicted(scan.tick, config.scan_period, config.process_noise_std))
        .collect();
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, state) in predicted.iter().enumerate() {
        let r = state.gate_radius(config.measurement_noise_std, config.gate_threshold);
        let p = state.position();
        let lo = cell([p[0] - r, p[1] - r], size);
        let hi = cell([p[0] + r, p[1] + r], size);
        // a gate larger than the whole radar disc is clipped to it
        let clip = cell([config.radar_radius, config.radar_radius], size);
        let neg = cell([-config.radar_radius, -config.radar_radius], size);
        for cx in lo.0.max(neg.0)..=hi.0.min(clip.0) {
            for cy in lo.1.max(neg.1)..=hi.1.min(clip.1) {
                grid.entry((cx, cy)).or_default().push(i);
            }
        }
    }

    let mut uf = UnionFind::new(m + facts.len());
    let mut touched = vec![false; facts.len()];
    for (j, z) in scan.detections.iter().enumerate() {
        let Some(near) = grid.get(&cell(*z, size)) else {
            continue;
        };
        for &i in near {
            if crate::kalman::gate(
                &predicted[i],
                *z,
                config.measurement_noise_std,
                config.gate_threshold,
            ) {
                uf.union(j, m + i);
                touched[i] = true;
            }
        }
    }

    let mut batches: Vec<Batch> = uf
        .groups()
        .into_iter()
        .filter(|members| members[0] < m)
        .map(|members| {
            let (meas, fs): (Vec<usize>, Vec<usize>) = members.into_iter().partition(|&n| n < m);
            Batch {
                measurements: meas,
                facts: fs.into_iter().map(|n| n - m).collect(),
            }
        })
        .collect();
    batches.sort_by_key(|b| b.measurements[0]);

    let mut missed: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, f) in facts.iter().enumerate() {
        if !touched[i] {
            missed.entry(f.target_id).or_default().push(i);
        }
    }
    ScanPlan {
        batches,
        missed: missed
            .into_iter()
            .map(|(target, facts)| Missed { target, facts })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kalman::KalmanState;
    use crate::model::Tick;

    fn fact(target: u64, x: f64, last: Tick) -> TargetPositionFact {
        TargetPositionFact {
            target_id: target,
            state: KalmanState::initiate([x, 0.0], 20.0, 30.0),
            last_detection: last,
            last_measurement: [x, 0.0],
        }
    }

    fn scan(tick: Tick, zs: &[f64]) -> Scan {
        Scan {
            tick,
            detections: zs.iter().map(|x| [*x, 0.0]).collect(),
            origins: vec![None; zs.len()],
        }
    }

    #[test]
    fn shared_track_joins_measurements() {
        let facts = [fact(1, 0.0, 0), fact(2, 5_000.0, 0)];
        let refs: Vec<_> = facts.iter().collect();
        let plan = plan_scan(
            &refs,
            &scan(1, &[5_000.0, 10.0, -3_000.0, -10.0]),
            &ScenarioConfig::default(),
        );
        assert_eq!(
            plan.batches,
            vec![
                Batch {
                    measurements: vec![0],
                    facts: vec![1]
                },
                Batch {
                    measurements: vec![1, 3],
                    facts: vec![0]
                },
                Batch {
                    measurements: vec![2],
                    facts: vec![]
                },
            ]
        );
        assert!(plan.missed.is_empty());
    }

    #[test]
    fn untouched_tracks_are_missed_per_target() {
        let facts = [
            fact(4, 0.0, 0),
            fact(4, 0.0, 1),
            fact(2, 3_000.0, 0),
            fact(9, 6_000.0, 0),
        ];
        let refs: Vec<_> = facts.iter().collect();
        let plan = plan_scan(&refs, &scan(3, &[6_000.0]), &ScenarioConfig::default());
        assert_eq!(
            plan.batches,
            vec![Batch {
                measurements: vec![0],
                facts: vec![3]
            }]
        );
        assert_eq!(
            plan.missed,
            vec![
                Missed {
                    target: 2,
                    facts: vec![2]
                },
                Missed {
                    target: 4,
                    facts: vec![0, 1]
                }
            ]
        );
    }

    #[test]
    fn grid_lookup_agrees_with_exhaustive_gating() {
        let config = ScenarioConfig::default();
        let facts: Vec<_> = (0..40)
            .map(|i| fact(i, -8_000.0 + 400.0 * i as f64, (i % 4) as Tick))
            .collect();
        let refs: Vec<_> = facts.iter().collect();
        let zs: Vec<f64> = (0..200).map(|j| -8_100.0 + 83.0 * j as f64).collect();
        let s = scan(5, &zs);
        let plan = plan_scan(&refs, &s, &config);
        for b in &plan.batches {
            for &j in &b.measurements {
                for (i, f) in facts.iter().enumerate() {
                    let p = f.predicted(5, config.scan_period, config.process_noise_std);
                    if crate::kalman::gate(
                        &p,
                        s.detections[j],
                        config.measurement_noise_std,
                        config.gate_threshold,
                    ) {
                        assert!(b.facts.contains(&i));
                    }
                }
            }
        }
        let covered: usize = plan.batches.iter().map(|b| b.measurements.len()).sum();
        assert_eq!(covered, zs.len());
    }
}
