//! Engine payloads of the radar tracker.

use mht_core::Payload;
use serde::{Deserialize, Serialize};

use crate::kalman::KalmanState;

pub type Tick = i64;

/// History items produced by the tracker. Every event carries its scan tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RadarEvent {
    TrackInitiated {
        tick: Tick,
        target: u64,
        position: [f64; 2],
    },
    TrackTerminated {
        tick: Tick,
        target: u64,
    },
    TargetMoved {
        tick: Tick,
        target: u64,
        from: [f64; 2],
        to: [f64; 2],
    },
    FalseAlarm {
        tick: Tick,
        position: [f64; 2],
    },
}

impl RadarEvent {
    pub fn tick(&self) -> Tick {
        match self {
            RadarEvent::TrackInitiated { tick, .. }
            | RadarEvent::TrackTerminated { tick, .. }
            | RadarEvent::TargetMoved { tick, .. }
            | RadarEvent::FalseAlarm { tick, .. } => *tick,
        }
    }
}

impl Payload for RadarEvent {
    fn encode(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("event serializes")
    }

    fn timestamp(&self) -> Option<i64> {
        Some(self.tick())
    }
}

/// Current belief about one target in one hypothesis. The filter state is
/// valid at `last_detection`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetPositionFact {
    pub target_id: u64,
    pub state: KalmanState,
    pub last_detection: Tick,
    /// The measurement of the last detection.
    pub last_measurement: [f64; 2],
}

impl TargetPositionFact {
    /// Filter state propagated to `tick`.
    pub fn predicted(&self, tick: Tick, scan_period: f64, sigma_a: f64) -> KalmanState {
        let dt = (tick - self.last_detection) as f64 * scan_period;
        if dt == 0.0 {
            self.state.clone()
        } else {
            self.state.predict(dt, sigma_a)
        }
    }
}

impl Payload for TargetPositionFact {
    fn encode(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("fact serializes")
    }
}

/// Target ids of tracks started by measurement `index` of scan `tick`.
pub fn new_target_id(tick: Tick, index: usize) -> u64 {
    tick as u64 * 10_000 + index as u64
}
